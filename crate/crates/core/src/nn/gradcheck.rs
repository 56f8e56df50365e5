use crate::error::Result;
use crate::nn::network::Parameterized;

/// Agreement below this absolute difference counts as exact; this covers
/// parameters whose true gradient is zero (e.g. a bias feeding batch norm).
pub const ABS_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff < ABS_FLOOR {
        0.0
    } else {
        diff / analytic.abs().max(numeric.abs()).max(ABS_FLOOR)
    }
}

/// Compares analytic gradients against central differences
/// `(f(p + h) - f(p - h)) / 2h`.
///
/// `loss` must evaluate the objective and accumulate gradients into the
/// model; it must be deterministic (freeze any noise it draws). `indices`
/// restricts the check to a subset of flat parameter positions.
pub fn grad_check<M, F>(model: &mut M, mut loss: F, h: f64, indices: Option<&[usize]>) -> Result<GradCheckReport>
where
    M: Parameterized<f64>,
    F: FnMut(&mut M) -> Result<f64>,
{
    model.zero_grad();
    loss(model)?;
    let analytic = model.grad_values();
    let all: Vec<usize>;
    let idx = match indices {
        Some(i) => i,
        None => {
            all = (0..analytic.len()).collect();
            &all
        }
    };
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
    };
    for &i in idx {
        let mut orig = 0.0;
        model.with_param(i, &mut |p| {
            orig = *p;
            *p = orig + h;
        });
        let up = loss(model)?;
        model.with_param(i, &mut |p| *p = orig - h);
        let down = loss(model)?;
        model.with_param(i, &mut |p| *p = orig);
        let numeric = (up - down) / (2.0 * h);
        let err = relative_error(analytic[i], numeric);
        report.checked += 1;
        if err > report.max_rel_error || report.checked == 1 {
            report.max_rel_error = err.max(report.max_rel_error);
            report.worst_index = i;
            report.analytic = analytic[i];
            report.numeric = numeric;
        }
    }
    model.zero_grad();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert_eq!(relative_error(1e-12, -3e-11), 0.0);
        assert!((relative_error(1.0, 1.1) - 0.1 / 1.1).abs() < 1e-12);
    }
}
