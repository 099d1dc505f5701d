//! Numerator and denominator subspaces of each cohomology on one `(sigma, m)` sub-block.
//!
//! Numerators live in degree `<= K` in `s`; denominators are images and kernels taken from
//! degree `<= K + headroom` and compared in that larger space. At the zero mode `d/ds` lowers
//! the degree, so without the headroom the top-degree kernel elements would look non-exact.

use super::blocks::{block_operator, g_constraints, image_grading, BlockSpace, BlockSymbol};
use super::linalg::{Mat, RankEngine, Scalar};
use super::{CohomoError, Theory};
use crate::calculus::OperatorKind;
use crate::specform::Grading;

/// One sub-block together with the engine and the two degree bounds.
pub(crate) struct Block<'a, E: RankEngine> {
    pub engine: &'a E,
    pub sym: &'a BlockSymbol<E::S>,
    pub m: i64,
    pub k: u32,
    pub k_big: u32,
}

/// Numerator basis in `V_K` and spanning set of the denominator in `V_{K+h}`, same ambient grading.
pub(crate) struct Quotient<S> {
    pub numerator: Mat<S>,
    pub denominator: Mat<S>,
    /// Row positions of `V_K` inside `V_{K+h}`.
    pub embedding: Vec<usize>,
    pub big_dim: usize,
}

impl<S: Scalar> Quotient<S> {
    pub fn dim<E: RankEngine<S = S>>(&self, engine: &E) -> Result<usize, CohomoError> {
        if self.numerator.cols() == 0 {
            return Ok(0);
        }
        let n = self.numerator.embed_rows(self.big_dim, &self.embedding);
        let w = engine.image(&self.denominator)?;
        Ok(engine.rank(&n.hcat(&w))? - w.cols())
    }
}

fn bi(p: i32, q: i32) -> Option<Grading> {
    (p >= 0 && q >= 0).then_some(Grading::Bidegree(p as u8, q as u8))
}

impl<E: RankEngine> Block<'_, E> {
    fn space(&self, g: Grading, big: bool) -> BlockSpace {
        BlockSpace::new(g, if big { self.k_big } else { self.k })
    }

    fn op(&self, op: OperatorKind, g: Grading, big: bool) -> Mat<E::S> {
        block_operator(op, self.sym, self.m, g, if big { self.k_big } else { self.k })
    }

    fn kernel_of(&self, ops: &[OperatorKind], g: Grading, big: bool) -> Result<Mat<E::S>, CohomoError> {
        let dim = self.space(g, big).dim();
        let stacked = ops.iter().fold(Mat::zeros(0, dim), |acc, &op| acc.vcat(&self.op(op, g, big)));
        self.engine.kernel(&stacked)
    }

    /// `op` applied to a subspace given by columns `basis` of `V_{K+h}(g)`.
    fn image_of(&self, op: OperatorKind, g: Grading, basis: &Mat<E::S>) -> Mat<E::S> {
        self.op(op, g, true).mul(basis)
    }

    /// Image of `op` on all of `V_{K+h}(g)`, or the empty span of the target when `g` is absent.
    fn image_full(&self, op: OperatorKind, g: Option<Grading>, target: Grading) -> Mat<E::S> {
        match g {
            Some(g) => self.op(op, g, true),
            None => Mat::zeros(self.space(target, true).dim(), 0),
        }
    }

    fn g_subspace(&self, g: Grading, big: bool) -> Result<Mat<E::S>, CohomoError> {
        let k = if big { self.k_big } else { self.k };
        self.engine.kernel(&g_constraints(self.sym, self.m, g, k))
    }

    fn quotient(&self, g: Grading, numerator: Mat<E::S>, denominator: Mat<E::S>) -> Quotient<E::S> {
        let small = self.space(g, false);
        let big = self.space(g, true);
        Quotient { numerator, denominator, embedding: small.embedding_into(&big), big_dim: big.dim() }
    }

    /// Quotient for `theory` at `key`: a bidegree, or a total degree for de Rham.
    pub fn theory_quotient(&self, theory: Theory, key: Grading) -> Result<Quotient<E::S>, CohomoError> {
        use OperatorKind::*;
        match (theory, key) {
            (Theory::DeRham, Grading::Degree(k)) => {
                let n = self.kernel_of(&[D], key, false)?;
                let prev = (k > 0).then(|| Grading::Degree(k - 1));
                Ok(self.quotient(key, n, self.image_full(D, prev, key)))
            }
            (Theory::Dolbeault | Theory::DelConjugate, Grading::Bidegree(p, q)) => {
                let (op, prev) = if theory == Theory::Dolbeault {
                    (Delbar, bi(p as i32, q as i32 - 1))
                } else {
                    (Del, bi(p as i32 - 1, q as i32))
                };
                let n = self.kernel_of(&[op], key, false)?;
                Ok(self.quotient(key, n, self.image_full(op, prev, key)))
            }
            (Theory::BottChern, Grading::Bidegree(p, q)) => {
                let n = self.kernel_of(&[Del, Delbar], key, false)?;
                let w = match (p, q) {
                    (0, 0) => Mat::zeros(self.space(key, true).dim(), 0),
                    (p, 0) => {
                        let src = Grading::Bidegree(p - 1, 0);
                        self.image_of(Del, src, &self.kernel_of(&[Delbar], src, true)?)
                    }
                    (0, q) => {
                        let src = Grading::Bidegree(0, q - 1);
                        self.image_of(Delbar, src, &self.kernel_of(&[Del], src, true)?)
                    }
                    (p, q) => self.op(DelDelbar, Grading::Bidegree(p - 1, q - 1), true),
                };
                Ok(self.quotient(key, n, w))
            }
            (Theory::Aeppli, Grading::Bidegree(p, q)) => {
                let n = self.kernel_of(&[DelDelbar], key, false)?;
                let del_part = self.image_full(Del, bi(p as i32 - 1, q as i32), key);
                let delbar_part = self.image_full(Delbar, bi(p as i32, q as i32 - 1), key);
                let w = match (p, q) {
                    (0, 0) => self.kernel_of(&[Delbar], key, true)?.hcat(&self.kernel_of(&[Del], key, true)?),
                    (_, 0) => del_part.hcat(&self.kernel_of(&[Delbar], key, true)?),
                    (0, _) => delbar_part.hcat(&self.kernel_of(&[Del], key, true)?),
                    _ => del_part.hcat(&delbar_part),
                };
                Ok(self.quotient(key, n, w))
            }
            (Theory::Third, Grading::Bidegree(p, q)) => Ok(self.third_quotient(p, q)?),
            _ => unreachable!("table keys are generated per theory"),
        }
    }

    /// `ker(dbar + del)` on pairs `(a, b)` in `V(p+1,q) + V(p,q+1)` modulo `{(del x, dbar x)}`:
    /// `del a`, `dbar a + del b` and `dbar b` must all vanish.
    fn third_quotient(&self, p: u8, q: u8) -> Result<Quotient<E::S>, CohomoError> {
        use OperatorKind::*;
        let left = Grading::Bidegree(p + 1, q);
        let right = Grading::Bidegree(p, q + 1);
        let (dl, dr) = (self.space(left, false).dim(), self.space(right, false).dim());
        let del_left = self.op(Del, left, false);
        let delbar_right = self.op(Delbar, right, false);
        let stacked = del_left
            .hcat(&Mat::zeros(del_left.rows(), dr))
            .vcat(&self.op(Delbar, left, false).hcat(&self.op(Del, right, false)))
            .vcat(&Mat::zeros(delbar_right.rows(), dl).hcat(&delbar_right));
        let n = self.engine.kernel(&stacked)?;
        let base = Grading::Bidegree(p, q);
        let w = self.op(Del, base, true).vcat(&self.op(Delbar, base, true));
        let (sl, sr) = (self.space(left, false), self.space(right, false));
        let (bl, br) = (self.space(left, true), self.space(right, true));
        let mut embedding = sl.embedding_into(&bl);
        embedding.extend(sr.embedding_into(&br).into_iter().map(|i| i + bl.dim()));
        debug_assert_eq!(image_grading(Del, base), left);
        Ok(Quotient { numerator: n, denominator: w, embedding, big_dim: bl.dim() + br.dim() })
    }

    /// Aeppli quotients through the `G`-complex.
    pub fn g_route_quotient(&self, key: Grading) -> Result<Quotient<E::S>, CohomoError> {
        use OperatorKind::*;
        let Grading::Bidegree(p, q) = key else { unreachable!("bidegree keys only") };
        let numerator = |extra: &[OperatorKind]| -> Result<Mat<E::S>, CohomoError> {
            let dim = self.space(key, false).dim();
            let stacked = extra
                .iter()
                .fold(g_constraints(self.sym, self.m, key, self.k), |acc, &op| acc.vcat(&self.op(op, key, false)));
            debug_assert_eq!(stacked.cols(), dim);
            self.engine.kernel(&stacked)
        };
        let g_image = |op: OperatorKind, src: Grading| -> Result<Mat<E::S>, CohomoError> {
            Ok(self.image_of(op, src, &self.g_subspace(src, true)?))
        };
        let (n, w) = match (p, q) {
            (0, 0) => (
                numerator(&[DelDelbar])?,
                self.kernel_of(&[Delbar], key, true)?.hcat(&self.kernel_of(&[Del], key, true)?),
            ),
            (0, 1) => (
                numerator(&[DelDelbar])?,
                g_image(Delbar, Grading::Bidegree(0, 0))?.hcat(&self.kernel_of(&[Del], key, true)?),
            ),
            (1, 0) => (
                numerator(&[DelDelbar])?,
                g_image(Del, Grading::Bidegree(0, 0))?.hcat(&self.kernel_of(&[Delbar], key, true)?),
            ),
            (1, 1) => (
                numerator(&[])?,
                g_image(Delbar, Grading::Bidegree(1, 0))?.hcat(&g_image(Del, Grading::Bidegree(0, 1))?),
            ),
            _ => return Err(CohomoError::Unsupported(format!("no G-complex route at {key}"))),
        };
        Ok(self.quotient(key, n, w))
    }
}
