//! One-dimensional minimization used by the simplex update, the residual
//! check and trajectory extraction.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a minimizer of `g` on `[a, b]`.
///
/// Returns the best point evaluated during the search together with its
/// value. Stops once the bracket is narrower than `tol`.
pub(crate) fn golden_section<G>(mut g: G, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    G: FnMut(f64) -> f64,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    let (mut best_x, mut best_g) = if gd < gc { (d, gd) } else { (c, gc) };
    // Bounded loop; each iteration shrinks the bracket by 1/phi.
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c);
            if gc < best_g || (gc == best_g && c < best_x) {
                best_x = c;
                best_g = gc;
            }
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d);
            if gd < best_g || (gd == best_g && d < best_x) {
                best_x = d;
                best_g = gd;
            }
        }
    }
    (best_x, best_g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_minimum() {
        let (x, v) = golden_section(|x| (x - 0.3) * (x - 0.3) + 2.0, 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn monotone_function_goes_to_bracket_end() {
        let (x, _) = golden_section(|x| x, 0.2, 0.4, 1e-9);
        assert!((x - 0.2).abs() < 1e-8);
    }
}
