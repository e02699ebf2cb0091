use super::{AutogradError, Graph, Tensor, Var};

/// Compares reverse-mode gradients of `f` at `point` against central
/// differences.
///
/// Returns the maximum over coordinates of
/// `|analytic - numeric| / max(1, |analytic|)`.
pub fn grad_check<F>(f: F, point: &Tensor, eps: f64) -> Result<f64, AutogradError>
where
    F: Fn(&mut Graph, Var) -> Var,
{
    if !(eps > 0.0 && eps <= 1e-3) {
        return Err(AutogradError::InvalidArgument(format!(
            "finite-difference step must be in (0, 1e-3], got {eps}"
        )));
    }
    let eval = |p: &Tensor| -> Result<f64, AutogradError> {
        let mut g = Graph::new();
        let x = g.leaf(p.clone());
        let y = f(&mut g, x);
        let v = g.value(y);
        if v.numel() != 1 {
            return Err(AutogradError::NonScalarRoot(v.shape().to_vec()));
        }
        Ok(v.item())
    };

    let mut g = Graph::new();
    let x = g.leaf(point.clone());
    let y = f(&mut g, x);
    let grads = g.backward(y)?;
    let analytic = grads.get(x).expect("leaf gradient").clone();

    let mut worst: f64 = 0.0;
    let mut probe = point.clone();
    for i in 0..point.numel() {
        let orig = point.data()[i];
        probe.data_mut()[i] = orig + eps;
        let plus = eval(&probe)?;
        probe.data_mut()[i] = orig - eps;
        let minus = eval(&probe)?;
        probe.data_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic.data()[i];
        worst = worst.max((a - numeric).abs() / a.abs().max(1.0));
    }
    Ok(worst)
}
