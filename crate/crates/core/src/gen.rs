//! Seeded synthetic instances.
//!
//! Both generators draw from one ChaCha8 stream seeded with the given 64-bit
//! seed. `gen_mip` draws the rows in order (each as `k` distinct columns),
//! then the objective coefficients; `gen_rofk` draws the `m` instances as one
//! sample without replacement from `[0, 2^n)`.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sample::Sample;
use crate::system::{ConstraintSystem, Direction, Row, VarKind};

/// `min c x` subject to `m` covering rows with exactly `k` ones and right-hand
/// side 1. The first `l` variables are binary, the rest real in `[0, 1]`, and
/// `c` is uniform on `{1, ..., 100}`.
pub fn gen_mip(n: usize, k: usize, l: usize, m: usize, seed: u64) -> Result<ConstraintSystem> {
    if k > n || l > n || k == 0 {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= n and l <= n, got n={n} k={k} l={l}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sys = ConstraintSystem::default();
    for j in 0..n {
        let kind = if j < l { VarKind::Binary } else { VarKind::Real };
        sys.add_named_var(format!("x{j}"), kind, 0.0, 1.0);
    }
    for _ in 0..m {
        let cols = index::sample(&mut rng, n, k);
        sys.add_row(Row::ge(cols.iter().map(|j| (j, 1.0)).collect(), 1.0));
    }
    let obj = (0..n).map(|j| (j, f64::from(rng.gen_range(1..=100u32)))).collect();
    sys.set_objective(Direction::Min, obj);
    Ok(sys)
}

/// `+1` iff at least `r` of the first `k` features are set.
pub fn rofk_label(x: &[u32], k: usize, r: usize) -> i8 {
    if x.iter().filter(|&&j| (j as usize) < k).count() >= r {
        1
    } else {
        -1
    }
}

/// `m` distinct uniform points of `{0,1}^n` labelled by the r-of-k threshold
/// function.
pub fn gen_rofk(n: usize, k: usize, r: usize, m: usize, seed: u64) -> Result<Sample> {
    if !(1 <= r && r <= k && k <= n) {
        return Err(Error::InvalidParameter(format!("need 1 <= r <= k <= n, got n={n} k={k} r={r}")));
    }
    if n >= usize::BITS as usize {
        return Err(Error::InvalidParameter(format!("n = {n} is too large")));
    }
    if m > 1usize << n {
        return Err(Error::TooManyInstances { m, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let codes = index::sample(&mut rng, 1usize << n, m);
    let instances: Vec<Vec<u32>> = codes
        .iter()
        .map(|c| (0..n as u32).filter(|&j| c >> j & 1 == 1).collect())
        .collect();
    let labels = instances.iter().map(|x| rofk_label(x, k, r)).collect();
    Sample::new(n, instances, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extform::{compress_binary, matrix_to_family};
    use crate::build::ElementOrder;
    use std::collections::HashSet;

    #[test]
    fn mip_shape_and_determinism() {
        let a = gen_mip(25, 10, 12, 10, 7).unwrap();
        let b = gen_mip(25, 10, 12, 10, 7).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert_ne!(a.to_text(), gen_mip(25, 10, 12, 10, 8).unwrap().to_text());
        assert_eq!(a.num_rows(), 10);
        for row in &a.rows {
            assert_eq!(row.coeffs.len(), 10);
            assert!(row.coeffs.iter().all(|&(_, c)| c == 1.0));
            assert_eq!(row.rhs, 1.0);
        }
        for (j, v) in a.vars.iter().enumerate() {
            assert_eq!(v.kind == VarKind::Binary, j < 12);
            assert_eq!((v.lo, v.hi), (0.0, 1.0));
        }
        for &(_, c) in &a.objective.coeffs {
            assert!((1.0..=100.0).contains(&c) && c.fract() == 0.0);
        }
    }

    #[test]
    fn mip_duplicates_collapse() {
        // C(6, 2) = 15 possible rows, far fewer than 500 draws.
        let sys = gen_mip(6, 2, 3, 500, 1).unwrap();
        let distinct: HashSet<Vec<(usize, u64)>> = sys
            .rows
            .iter()
            .map(|r| r.coeffs.iter().map(|&(j, c)| (j, c.to_bits())).collect())
            .collect();
        let (family, dropped) = matrix_to_family(&sys).unwrap();
        assert_eq!(family.len(), distinct.len());
        assert!(family.len() <= 15);
        assert_eq!(family.len() + dropped, 500);
        let (ext, _) = compress_binary(&sys, &ElementOrder::Frequency).unwrap();
        assert!(ext.system.num_rows() <= 500);
    }

    #[test]
    fn rofk_labels() {
        // Exactly r = 2 of the first k = 4 set.
        assert_eq!(rofk_label(&[0, 3, 5], 4, 2), 1);
        assert_eq!(rofk_label(&[0, 5, 6], 4, 2), -1);
        let s = gen_rofk(8, 4, 2, 200, 3).unwrap();
        let distinct: HashSet<&Vec<u32>> = s.instances().iter().collect();
        assert_eq!(distinct.len(), 200);
        for i in 0..s.len() {
            assert_eq!(s.label(i), rofk_label(s.instance(i), 4, 2));
        }
        assert_eq!(s, gen_rofk(8, 4, 2, 200, 3).unwrap());
    }

    #[test]
    fn rofk_limits() {
        assert!(matches!(gen_rofk(3, 2, 1, 9, 0), Err(Error::TooManyInstances { .. })));
        assert_eq!(gen_rofk(3, 2, 1, 8, 0).unwrap().len(), 8);
        assert!(gen_rofk(3, 2, 3, 2, 0).is_err());
    }
}
