use super::graph::{Graph, Var};
use super::tensor::Tensor;
use crate::error::Result;

/// Largest relative gap between the tape gradient and central differences.
///
/// `f` builds a scalar from the leaf it is handed. The relative error of each
/// entry uses `max(|analytic|, |numeric|, 1e-8)` as denominator.
pub fn grad_check<F>(f: F, x: &Tensor, h: f64) -> Result<f64>
where
    F: Fn(&mut Graph, Var) -> Result<Var>,
{
    assert!(h > 0.0, "step must be positive");
    let mut g = Graph::new();
    let leaf = g.param(x.clone());
    let out = f(&mut g, leaf)?;
    g.backward(out)?;
    let analytic = g.grad(leaf).map_or_else(|| vec![0.0; x.numel()], <[f64]>::to_vec);

    let eval = |shifted: &Tensor| -> Result<f64> {
        let mut g = Graph::new();
        let leaf = g.param(shifted.clone());
        let out = f(&mut g, leaf)?;
        Ok(g.value(out).item())
    };
    let mut worst: f64 = 0.0;
    let mut probe = x.clone();
    for (i, &a) in analytic.iter().enumerate() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let up = eval(&probe)?;
        probe.data_mut()[i] = orig - h;
        let down = eval(&probe)?;
        probe.data_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let denom = a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(worst)
}
