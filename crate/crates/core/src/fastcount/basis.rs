/// Truth table of `phi: {0,1}^3 -> {0,1}`; bit `a1 | a2 << 1 | a3 << 2` holds
/// `phi(a1, a2, a3)`.
pub type TruthTable = u8;

pub fn truth(phi: TruthTable, a: [bool; 3]) -> bool {
    phi >> (a[0] as u8 | (a[1] as u8) << 1 | (a[2] as u8) << 2) & 1 == 1
}

/// Coefficients of `phi` in the basis of conjunctions `AND_{i in S} a_i`.
/// Index `S` is a bitmask over `{a1, a2, a3}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisDecomposition {
    pub coefficients: [i64; 8],
}

impl BasisDecomposition {
    pub fn coefficient(&self, s: u8) -> i64 {
        self.coefficients[s as usize]
    }

    /// `sum_S alpha_S * prod_{i in S} a_i`.
    pub fn eval(&self, a: [bool; 3]) -> i64 {
        let mask = a[0] as usize | (a[1] as usize) << 1 | (a[2] as usize) << 2;
        (0..8)
            .filter(|s| s & mask == *s)
            .map(|s| self.coefficients[s])
            .sum()
    }
}

/// Moebius inversion: `alpha_S = sum_{T subset S} (-1)^{|S \ T|} phi(1_T)`.
pub fn and_basis_coefficients(phi: TruthTable) -> BasisDecomposition {
    let mut coefficients = [0i64; 8];
    for (s, c) in coefficients.iter_mut().enumerate() {
        let mut t = s;
        loop {
            let sign = if (s & !t).count_ones() % 2 == 0 { 1 } else { -1 };
            *c += sign * (phi >> t & 1) as i64;
            if t == 0 {
                break;
            }
            t = (t - 1) & s;
        }
    }
    BasisDecomposition { coefficients }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(and_basis_coefficients(0xff).coefficients, [1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(and_basis_coefficients(0x80).coefficients, [0, 0, 0, 0, 0, 0, 0, 1]);
        // a1 xor a2: true when exactly one of bits 0, 1 of the index is set
        let xor = (0..8u8).filter(|i| (i & 1) ^ (i >> 1 & 1) == 1).fold(0u8, |t, i| t | 1 << i);
        assert_eq!(and_basis_coefficients(xor).coefficients, [0, 1, 1, -2, 0, 0, 0, 0]);
    }

    #[test]
    fn reconstructs_all_tables() {
        for phi in 0..=255u8 {
            let d = and_basis_coefficients(phi);
            for i in 0..8u8 {
                let a = [i & 1 == 1, i & 2 == 2, i & 4 == 4];
                assert_eq!(d.eval(a), truth(phi, a) as i64, "phi={phi} input={i}");
            }
        }
    }
}
