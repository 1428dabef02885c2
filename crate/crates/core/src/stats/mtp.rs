//! Mass-transport check with the transport `f(G, o, x) = 1{x ~ o} / deg(o)`.
//!
//! Unimodularity forces `E[Σ_{x~o} 1/deg(x)] = 1`; the plain Galton–Watson
//! rooting violates it, the degree-biased rooting satisfies it.

use super::tests::{chi_square, mean_interval, TestReport};
use crate::error::{Error, Result};
use crate::tree::{OffspringDist, RootedTree, TreeKind};

/// `Σ_{x~o} 1/deg(x)` for the root of `tree`.
pub fn mtp_statistic(tree: &RootedTree) -> Result<f64> {
    if tree.depth() < 2 {
        return Err(Error::validation(
            "depth",
            format!("depth {} leaves root-neighbour degrees undetermined (need >= 2)", tree.depth()),
        ));
    }
    Ok(tree.children(tree.root()).map(|c| 1.0 / tree.degree(c) as f64).sum())
}

pub fn mtp_check(samples: &[RootedTree], level: f64) -> Result<TestReport> {
    if samples.is_empty() {
        return Err(Error::validation("samples", "no trees supplied"));
    }
    let values = samples.iter().map(mtp_statistic).collect::<Result<Vec<_>>>()?;
    let (mean, interval) = mean_interval(&values, level);
    Ok(TestReport {
        test: "mass-transport".into(),
        statistic: mean,
        degrees_of_freedom: None,
        p_value: None,
        sample_size: values.len() as u64,
        level,
        interval: Some(interval),
        passed: interval.contains(1.0),
        stream: None,
    })
}

/// Chi-square test of the empirical root degree against the rooting law.
pub fn root_degree_test(
    samples: &[RootedTree],
    dist: &OffspringDist,
    kind: TreeKind,
    level: f64,
) -> Result<TestReport> {
    let law = dist.root_law(kind);
    let mut observed = vec![0u64; law.len()];
    for t in samples {
        let k = t.child_count(t.root()) as u32;
        let slot = law
            .iter()
            .position(|&(j, _)| j == k)
            .ok_or_else(|| Error::validation("samples", format!("root degree {k} outside the support")))?;
        observed[slot] += 1;
    }
    let probs: Vec<f64> = law.iter().map(|&(_, p)| p).collect();
    let mut report = chi_square(&observed, &probs, level)?;
    report.test = "root-degree chi-square".into();
    Ok(report)
}

#[cfg(test)]
mod unit {
    use super::*;

    #[test]
    fn regular_tree_statistic_is_one() {
        let d = OffspringDist::parse("2:1").unwrap();
        let mut rng = crate::stats::RandomStreamSpec::new(1).stream();
        let t = crate::tree::sample_tree(&d, TreeKind::Ugw, 3, 1000, &mut rng).unwrap();
        assert_eq!(mtp_statistic(&t).unwrap(), 1.0);
        let r = mtp_check(&[t.clone(), t], 0.99).unwrap();
        assert!(r.passed);
        assert_eq!(r.statistic, 1.0);
    }

    #[test]
    fn shallow_trees_rejected() {
        let t = RootedTree::complete(2, 1);
        assert!(matches!(mtp_statistic(&t), Err(Error::Validation { .. })));
    }
}
