use serde::{Deserialize, Serialize};

use crate::attribute::{ExplainOptions, Explainer, Subsets};
use crate::error::{Error, Result};
use crate::lift::LiftSpec;
use crate::map::MultilinearMap;
use crate::oracle::{enumerate_game, exact_sii};

/// `1 − SS_res/SS_tot`, or `None` when the reference has zero variance.
pub fn r2(truth: &[f64], pred: &[f64]) -> Option<f64> {
    assert_eq!(truth.len(), pred.len());
    if truth.is_empty() {
        return None;
    }
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let sst: f64 = truth.iter().map(|y| (y - mean).powi(2)).sum();
    let sse: f64 = truth.iter().zip(pred).map(|(y, p)| (y - p).powi(2)).sum();
    let scale: f64 = truth.iter().map(|y| y * y).sum();
    if sst == 0.0 || sst <= 1e-30 * scale {
        return None;
    }
    Some(1.0 - sse / sst)
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (ab / (na * nb)).clamp(-1.0, 1.0)
}

pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64
}

/// Agreement of stacked order-`k` indices over all test instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderQuality {
    pub order: usize,
    /// `None` when the reference values have zero variance.
    pub r2: Option<f64>,
    pub cosine: f64,
    pub mse: f64,
    pub count: usize,
}

/// Student indices by interpolation against teacher indices by exhaustive
/// enumeration, stacked across `instances`.
pub fn eval_quality<S, T>(
    student: &S,
    teacher: &T,
    lifts: &LiftSpec,
    instances: &[Vec<f64>],
    orders: &[usize],
) -> Result<Vec<OrderQuality>>
where
    S: MultilinearMap + ?Sized,
    T: MultilinearMap + ?Sized,
{
    let n = teacher.n();
    if student.n() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            found: student.n(),
        });
    }
    let tables = instances
        .iter()
        .map(|x| enumerate_game(teacher, lifts, x))
        .collect::<Result<Vec<_>>>()?;
    orders
        .iter()
        .map(|&k| {
            let explainer = Explainer::new(n, k)?;
            let mut truth = Vec::new();
            let mut pred = Vec::new();
            for (x, table) in instances.iter().zip(&tables) {
                truth.extend(exact_sii(table, k)?.values());
                let set = explainer.explain(student, lifts, x, &Subsets::All, ExplainOptions::for_order(k))?;
                pred.extend(set.values());
            }
            Ok(OrderQuality {
                order: k,
                r2: r2(&truth, &pred),
                cosine: cosine(&truth, &pred),
                mse: mse(&truth, &pred),
                count: truth.len(),
            })
        })
        .collect()
}
