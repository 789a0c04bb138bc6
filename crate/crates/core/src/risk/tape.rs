use super::{RiskKind, RiskSpec};
use crate::autodiff::{Scalar, Var};
use crate::error::{Error, Result};
use crate::network::{forward_jet, Arch};

/// The risk of `kind` recorded on the tape of `params`.
///
/// Point-by-point reference evaluation through tape-backed jets; it is slow
/// but shares no code with the batched engine, which makes it a useful
/// cross-check.
pub fn risk_on_tape<'t>(params: &[Var<'t>], arch: Arch, spec: &RiskSpec, kind: RiskKind) -> Result<Var<'t>> {
    spec.validate()?;
    let seed = *params.first().ok_or_else(|| Error::Shape("empty parameter vector".into()))?;
    let s = &spec.samples;
    let l = spec.lambdas;
    let (d1, d2) = (arch.d1, arch.d2);
    let mut total = seed.lift(0.0);

    let mut misfit = |pts: &[f64], ys: &[f64], w: f64| -> Result<()> {
        for (x, y) in pts.chunks(d1).zip(ys.chunks(d2)) {
            let jets = forward_jet(arch, params, x, 0)?;
            for (j, &yi) in jets.iter().zip(y) {
                let r = j.value().offset(-yi);
                total = total + (r * r).scale(w);
            }
        }
        Ok(())
    };
    if s.n() > 0 && l.d > 0.0 {
        misfit(&s.data_x, &s.data_y, l.d / s.n() as f64)?;
    }
    if s.n_e() > 0 && l.e > 0.0 {
        misfit(&s.boundary_x, &s.boundary_h, l.e / s.n_e() as f64)?;
    }

    let order = spec.collocation_order(kind);
    let sobolev = kind == RiskKind::Sobolev && l.t > 0.0;
    if s.n_r() > 0 && (!spec.operators.is_empty() || sobolev) {
        let w = 1.0 / s.n_r() as f64;
        for x in s.collocation_x.chunks(d1) {
            let jets = forward_jet(arch, params, x, order)?;
            for op in &spec.operators {
                let r = op.residual(&jets, x)?;
                total = total + (r * r).scale(w);
            }
            if sobolev {
                for j in &jets {
                    for (alpha, &v) in j.layout().indices().iter().zip(j.coeffs()) {
                        if alpha.order() as usize <= spec.m + 1 {
                            total = total + (v * v).scale(l.t * w);
                        }
                    }
                }
            }
        }
    }
    if kind != RiskKind::Empirical && l.ridge > 0.0 {
        for &p in params {
            total = total + (p * p).scale(l.ridge);
        }
    }
    Ok(total)
}
