use crate::autodiff::JetLayout;
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::network::{Engine, JetBatch, MlpParams, BLOCK};
use crate::operators::Expr;

/// A vector field on the domain whose jets can be evaluated at points.
pub trait Field: Sync {
    fn d1(&self) -> usize;
    fn d2(&self) -> usize;
    /// Jets of order `order` at each point of the flat buffer `points`.
    fn jets(&self, points: &[f64], order: usize, exec: Exec) -> Result<JetBatch>;
}

impl Field for MlpParams {
    fn d1(&self) -> usize {
        self.arch().d1
    }

    fn d2(&self) -> usize {
        self.arch().d2
    }

    fn jets(&self, points: &[f64], order: usize, exec: Exec) -> Result<JetBatch> {
        Engine::new(self.arch(), order)?.evaluate(self.theta(), points, exec)
    }
}

/// Field given by closed-form expressions, one per output.
#[derive(Clone, Debug)]
pub struct ClosedForm {
    d1: usize,
    exprs: Vec<Expr>,
}

impl ClosedForm {
    pub fn new(d1: usize, exprs: Vec<Expr>) -> Result<Self> {
        if exprs.is_empty() {
            return Err(Error::InvalidSpec("closed-form field without components".into()));
        }
        for e in &exprs {
            e.check_dim(d1)?;
        }
        Ok(ClosedForm { d1, exprs })
    }
}

impl Field for ClosedForm {
    fn d1(&self) -> usize {
        self.d1
    }

    fn d2(&self) -> usize {
        self.exprs.len()
    }

    fn jets(&self, points: &[f64], order: usize, exec: Exec) -> Result<JetBatch> {
        let n_c = JetLayout::get(self.d1, order)?.len();
        let n = points.len() / self.d1;
        let blocks = exec::map_blocks(exec, n, BLOCK, |r| {
            r.map(|p| {
                let x = &points[p * self.d1..(p + 1) * self.d1];
                let mut v = Vec::with_capacity(self.exprs.len() * n_c);
                for e in &self.exprs {
                    v.extend_from_slice(e.jet(x, order)?.coeffs());
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()
        });
        let mut coeffs = Vec::with_capacity(n);
        for b in blocks {
            coeffs.extend(b?);
        }
        Ok(JetBatch { n_c, d2: self.exprs.len(), coeffs })
    }
}
