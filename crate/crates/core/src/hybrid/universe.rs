use super::HybridInstance;

/// The first `t` primes at or above `max(2, ceil(2 t log2 t))`.
pub fn prime_support(t: usize) -> Vec<u64> {
    assert!(t >= 1);
    let lo = ((2.0 * t as f64 * (t as f64).log2()).ceil() as u64).max(2);
    let mut out = Vec::with_capacity(t);
    let mut p = lo;
    while out.len() < t {
        if is_prime(p) {
            out.push(p);
        }
        p += 1;
    }
    out
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// `{(i, u mod p_i)}` for every slot `i`.
pub fn hash_element(u: u64, primes: &[u64]) -> Vec<(usize, u64)> {
    primes.iter().enumerate().map(|(i, p)| (i, u % p)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniverseReduction {
    pub t: usize,
    pub primes: Vec<u64>,
    /// Whether each type part was hashed (otherwise copied `t` times).
    pub hashed: Vec<bool>,
    pub delta: u64,
    pub e_bound: u64,
}

/// Per-tuple error bound `2^(k+1) (k s)^2 ceil(log2 max(2,|U|))` when some
/// part is hashed; copies are exact.
pub fn e_bound(k: usize, s: usize, universe: usize, any_hashed: bool) -> u64 {
    if !any_hashed {
        return 0;
    }
    let log = (universe.max(2) as f64).log2().ceil() as u64;
    (1u64 << (k + 1)) * ((k * s) as u64).pow(2) * log
}

/// Whether a part of `size` elements is hashed for multiplicity `t`.
pub(crate) fn hashes(size: usize, t: usize, prime_sum: u64) -> bool {
    let tf = t as f64;
    size as f64 > 4.0 * tf * tf.log2() && prime_sum < (t * size) as u64
}

/// Universe size after reducing with multiplicity `t`.
pub(crate) fn reduced_size(parts: &[usize], t: usize, prime_sum: u64) -> (usize, bool) {
    let mut total = 0usize;
    let mut any = false;
    for &sz in parts {
        if hashes(sz, t, prime_sum) {
            any = true;
            total += prime_sum as usize;
        } else {
            total += t * sz;
        }
    }
    (total, any)
}

/// Replaces every element by `t` one-entries: verbatim copies for small
/// parts, prime residues of its in-part index for large ones.
pub fn universe_reduce(inst: &HybridInstance, t: usize) -> (HybridInstance, UniverseReduction) {
    let k = inst.k();
    let primes = prime_support(t);
    let psum: u64 = primes.iter().sum();
    let offsets: Vec<u64> = primes
        .iter()
        .scan(0, |acc, p| {
            let o = *acc;
            *acc += p;
            Some(o)
        })
        .collect();
    let parts = inst.part_sizes();
    let hashed: Vec<bool> = parts.iter().map(|&sz| hashes(sz, t, psum)).collect();

    // position of each element inside its part
    let mut seen = vec![0u64; parts.len()];
    let local: Vec<u64> = inst
        .types()
        .iter()
        .map(|&tau| {
            let j = seen[tau as usize];
            seen[tau as usize] += 1;
            j
        })
        .collect();

    let mut base = vec![0u32; parts.len()];
    let mut types = Vec::new();
    for (tau, &sz) in parts.iter().enumerate() {
        base[tau] = types.len() as u32;
        let len = if hashed[tau] { psum as usize } else { t * sz };
        types.extend(std::iter::repeat_n(tau as u32, len));
    }
    let image = |u: u32| -> Vec<u32> {
        let tau = inst.types()[u as usize] as usize;
        let j = local[u as usize];
        if hashed[tau] {
            hash_element(j, &primes)
                .into_iter()
                .map(|(i, r)| base[tau] + (offsets[i] + r) as u32)
                .collect()
        } else {
            (0..t).map(|c| base[tau] + (c as u64 * parts[tau] as u64 + j) as u32).collect()
        }
    };
    let families = inst
        .families()
        .iter()
        .map(|fam| fam.iter().map(|s| s.iter().flat_map(|&u| image(u)).collect()).collect())
        .collect();
    let reduced = HybridInstance::with_names(inst.kind(), types, families, inst.names().to_vec())
        .expect("reduction keeps the instance well formed");

    let delta = if hashed[0] {
        (t * parts[0]) as u64 - psum
    } else {
        0
    };
    let any = hashed.iter().any(|&h| h);
    let red = UniverseReduction {
        t,
        primes,
        hashed,
        delta,
        e_bound: e_bound(k, inst.max_set_size(), inst.universe_len(), any),
    };
    (reduced, red)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::OptKind;

    #[test]
    fn prime_examples() {
        assert_eq!(prime_support(1), vec![2]);
        assert_eq!(prime_support(3), vec![11, 13, 17]);
        assert_eq!(prime_support(5), vec![29, 31, 37, 41, 43]);
    }

    #[test]
    fn hash_examples() {
        assert_eq!(hash_element(0, &[11, 13, 17]), vec![(0, 0), (1, 0), (2, 0)]);
        assert_eq!(hash_element(24, &[11, 13, 17]), vec![(0, 2), (1, 11), (2, 7)]);
        let a = hash_element(0, &[11, 13]);
        let b = hash_element(143, &[11, 13]);
        assert_eq!(a.iter().filter(|p| b.contains(p)).count(), 2);
    }

    #[test]
    fn copies_give_zero_delta() {
        let inst = HybridInstance::new(OptKind::Max, vec![0, 0, 1], vec![vec![vec![0, 2]]]).unwrap();
        let (r, red) = universe_reduce(&inst, 3);
        assert!(red.hashed.iter().all(|h| !h));
        assert_eq!((red.delta, red.e_bound), (0, 0));
        assert_eq!(r.total(&[0]), 3 * inst.total(&[0]));
    }

    #[test]
    fn empty_sets_hashed_delta_is_exact() {
        let inst = HybridInstance::new(OptKind::Max, vec![0; 40], vec![vec![vec![]]]).unwrap();
        let (r, red) = universe_reduce(&inst, 2);
        assert!(red.hashed[0]);
        let v = r.total(&[0]);
        assert_eq!(v, r.part_sizes()[0] as u64);
        assert_eq!(2 * 40 - v, red.delta);
    }
}
