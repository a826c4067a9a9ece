//! Bessel functions of the first kind for integer order.
//!
//! Small arguments (relative to the order) use the power series, where every
//! term has the same sign pattern and the ratio of consecutive terms is at
//! most 1/4. Everything else goes through Miller's downward recurrence,
//! normalized with `J_0 + 2 Σ J_{2k} = 1`.

use crate::error::{Error, Result};

/// Largest order accepted by [`bessel_j`].
pub const MAX_ORDER: u64 = 1_000_000;

const BIG: f64 = 1.0e250;
const BIG_INV: f64 = 1.0e-250;

/// `J_n(x)` for integer `n` and real `x`.
pub fn bessel_j(order: i64, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("Bessel argument must be finite, got {x}")));
    }
    let n = order.unsigned_abs();
    if n > MAX_ORDER {
        return Err(Error::Domain(format!("Bessel order {order} exceeds {MAX_ORDER}")));
    }
    // J_{-n}(x) = (-1)^n J_n(x) and J_n(-x) = (-1)^n J_n(x).
    let odd = n % 2 == 1;
    let flip = odd && ((order < 0) != (x < 0.0));
    let ax = x.abs();
    let value = if ax == 0.0 {
        if n == 0 {
            1.0
        } else {
            0.0
        }
    } else if series_preferred(n, ax) {
        series(n, ax)
    } else {
        miller_single(n as usize, ax)
    };
    Ok(if flip { -value } else { value })
}

/// `J_0(x) ..= J_{max_order}(x)` from a single downward sweep.
pub fn bessel_j_orders(max_order: usize, x: f64) -> Result<Vec<f64>> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("Bessel argument must be finite, got {x}")));
    }
    if max_order as u64 > MAX_ORDER {
        return Err(Error::Domain(format!("Bessel order {max_order} exceeds {MAX_ORDER}")));
    }
    let ax = x.abs();
    let mut out = if ax == 0.0 {
        let mut v = vec![0.0; max_order + 1];
        v[0] = 1.0;
        v
    } else if ax < 1.0e-3 {
        (0..=max_order as u64).map(|n| series(n, ax)).collect()
    } else {
        miller_range(max_order, ax)
    };
    if x < 0.0 {
        out.iter_mut().skip(1).step_by(2).for_each(|v| *v = -*v);
    }
    Ok(out)
}

fn series_preferred(n: u64, x: f64) -> bool {
    x * x <= (n as f64) + 1.0
}

/// `(x/2)^n / n!` with the scale tracked separately so large orders neither
/// overflow nor lose precision through a log-gamma.
fn leading_term(n: u64, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut mantissa = 1.0f64;
    let mut decades = 0i64;
    for k in 1..=n {
        mantissa *= half / k as f64;
        if mantissa < 1.0e-100 {
            mantissa *= 1.0e100;
            decades -= 100;
        } else if mantissa > 1.0e100 {
            mantissa *= 1.0e-100;
            decades += 100;
        }
    }
    if decades < -400 {
        return 0.0;
    }
    mantissa * 10f64.powi(decades as i32)
}

fn series(n: u64, x: f64) -> f64 {
    let lead = leading_term(n, x);
    if lead == 0.0 {
        return 0.0;
    }
    let q = -0.25 * x * x;
    let nf = n as f64;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..1000u32 {
        let kf = k as f64;
        term *= q / (kf * (nf + kf));
        sum += term;
        if term.abs() <= 1.0e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

fn start_index(top: f64) -> usize {
    let m = (top + (160.0 * top).sqrt() + 30.0).ceil() as usize;
    m + (m % 2)
}

fn miller_single(n: usize, x: f64) -> f64 {
    let m = start_index((n as f64).max(x));
    let two_over_x = 2.0 / x;
    let mut above = 0.0; // J_{j+1}
    let mut current = 1.0; // J_j
    let mut even_sum = if m % 2 == 0 { 1.0 } else { 0.0 };
    let mut target = 0.0;
    for j in (1..=m).rev() {
        let below = j as f64 * two_over_x * current - above;
        above = current;
        current = below;
        if current.abs() > BIG {
            current *= BIG_INV;
            above *= BIG_INV;
            target *= BIG_INV;
            even_sum *= BIG_INV;
        }
        let idx = j - 1;
        if idx == n {
            target = current;
        }
        if idx > 0 && idx % 2 == 0 {
            even_sum += current;
        }
    }
    let norm = 2.0 * even_sum + current;
    target / norm
}

fn miller_range(max_order: usize, x: f64) -> Vec<f64> {
    let m = start_index((max_order as f64).max(x));
    let two_over_x = 2.0 / x;
    let mut out = vec![0.0; max_order + 1];
    let mut above = 0.0;
    let mut current = 1.0;
    let mut even_sum = if m % 2 == 0 { 1.0 } else { 0.0 };
    for j in (1..=m).rev() {
        let below = j as f64 * two_over_x * current - above;
        above = current;
        current = below;
        let idx = j - 1;
        if current.abs() > BIG {
            current *= BIG_INV;
            above *= BIG_INV;
            even_sum *= BIG_INV;
            let stored = max_order.min(m);
            if idx < stored {
                out[idx + 1..=stored].iter_mut().for_each(|v| *v *= BIG_INV);
            }
        }
        if idx <= max_order {
            out[idx] = current;
        }
        if idx > 0 && idx % 2 == 0 {
            even_sum += current;
        }
    }
    let norm = 2.0 * even_sum + current;
    out.iter_mut().for_each(|v| *v /= norm);
    out
}
