use crate::combine::{CombinedSample, Method};
use crate::error::{Error, Result};
use crate::model::ParameterVector;
use crate::shard::SubposteriorResult;

/// Average of recentred subposteriors.
///
/// Every draw of chain `i` is moved by `theta_bar - theta_i` where `theta_i` is
/// the chain mean and `theta_bar` the average of the `K` chain means; the
/// shifted chains are then pooled.
pub fn combine_ar(sub: &SubposteriorResult) -> Result<CombinedSample> {
    let d = sub.dim();
    let k = sub.k() as f64;
    let mut center = vec![0.0; d];
    for m in &sub.shard_means {
        for (c, v) in center.iter_mut().zip(m.values()) {
            *c += v;
        }
    }
    for c in &mut center {
        *c /= k;
    }
    let center = ParameterVector::new(center, sub.names().to_vec())?;
    combine_ar_at(sub, &center, Method::Ar)
}

/// Recentres every chain at `center` instead of the average of chain means.
/// The chain means themselves are left as computed.
pub fn combine_ar_at(sub: &SubposteriorResult, center: &ParameterVector, method: Method) -> Result<CombinedSample> {
    let d = sub.dim();
    if center.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: center.dim(),
        });
    }
    let total: usize = sub.chains.iter().map(|c| c.len()).sum();
    let mut draws = Vec::with_capacity(total * d);
    for (chain, mean) in sub.chains.iter().zip(&sub.shard_means) {
        if chain.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: chain.dim(),
            });
        }
        let shift: Vec<f64> = center
            .values()
            .iter()
            .zip(mean.values())
            .map(|(c, m)| c - m)
            .collect();
        draws.extend(chain.shifted(&shift));
    }
    Ok(CombinedSample::new(draws, center.clone(), method))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::ChainDraws;

    fn sub(chains: Vec<Vec<f64>>, d: usize) -> SubposteriorResult {
        let chains = chains
            .into_iter()
            .enumerate()
            .map(|(i, c)| ChainDraws::new(c, d, i, 0, 0, 1.0).unwrap())
            .collect();
        let names = (0..d).map(|j| format!("x{j}")).collect();
        SubposteriorResult::from_chains(chains, names).unwrap()
    }

    #[test]
    fn single_chain_is_identity() {
        let s = sub(vec![vec![0.3, 1.0, -0.4, 2.0, 0.9, 0.1]], 2);
        let c = combine_ar(&s).unwrap();
        assert_eq!(c.as_slice(), s.chains[0].as_slice());
    }

    #[test]
    fn two_chains_shift_to_common_mean() {
        // Chain means (0, 0) and (2, 2).
        let s = sub(
            vec![vec![-1.0, 1.0, 1.0, -1.0], vec![2.0, 3.0, 2.0, 1.0]],
            2,
        );
        let c = combine_ar(&s).unwrap();
        assert_eq!(c.center.values(), &[1.0, 1.0]);
        assert_eq!(
            c.as_slice(),
            &[0.0, 2.0, 2.0, 0.0, 1.0, 2.0, 1.0, 0.0]
        );
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn wrong_center_dimension() {
        let s = sub(vec![vec![0.0, 1.0]], 1);
        let center = ParameterVector::unnamed(vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            combine_ar_at(&s, &center, Method::Ar),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
