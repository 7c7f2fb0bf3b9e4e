use std::collections::HashSet;

use super::basis::{and_basis_coefficients, TruthTable};

/// Tripartite graph on local vertex indices `0..nx`, `0..ny`, `0..nz`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TripartiteGraph {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub e_xy: Vec<(u32, u32)>,
    pub e_xz: Vec<(u32, u32)>,
    pub e_yz: Vec<(u32, u32)>,
}

impl TripartiteGraph {
    /// Sorts and deduplicates edges; panics on out-of-range endpoints.
    pub fn new(
        nx: usize,
        ny: usize,
        nz: usize,
        mut e_xy: Vec<(u32, u32)>,
        mut e_xz: Vec<(u32, u32)>,
        mut e_yz: Vec<(u32, u32)>,
    ) -> Self {
        for (es, na, nb) in [(&mut e_xy, nx, ny), (&mut e_xz, nx, nz), (&mut e_yz, ny, nz)] {
            es.sort_unstable();
            es.dedup();
            assert!(es.iter().all(|&(a, b)| (a as usize) < na && (b as usize) < nb));
        }
        TripartiteGraph {
            nx,
            ny,
            nz,
            e_xy,
            e_xz,
            e_yz,
        }
    }

    pub fn m(&self) -> usize {
        self.e_xy.len() + self.e_xz.len() + self.e_yz.len()
    }
}

/// Diagnostics of the heavy/light split.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TriangleStats {
    /// `ceil(sqrt(m))`; vertices of larger degree are heavy.
    pub threshold: usize,
    /// Heavy vertices left for the final cubic pass.
    pub heavy: usize,
}

fn adj(n: usize, edges: &[(u32, u32)], rev: bool) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new(); n];
    for &(a, b) in edges {
        let (from, to) = if rev { (b, a) } else { (a, b) };
        out[from as usize].push(to);
    }
    out
}

pub(crate) fn ceil_sqrt(m: usize) -> usize {
    let mut r = (m as f64).sqrt() as usize;
    while r * r < m {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= m {
        r -= 1;
    }
    r
}

/// Triangles through each x, listing those with a light vertex first and
/// brute-forcing the all-heavy remainder.
pub fn triangles_per_x(g: &TripartiteGraph) -> (Vec<u64>, TriangleStats) {
    let m = g.m();
    let thr = ceil_sqrt(m);
    let xy = adj(g.nx, &g.e_xy, false);
    let yx = adj(g.ny, &g.e_xy, true);
    let xz = adj(g.nx, &g.e_xz, false);
    let zx = adj(g.nz, &g.e_xz, true);
    let yz = adj(g.ny, &g.e_yz, false);
    let zy = adj(g.nz, &g.e_yz, true);
    let s_xy: HashSet<(u32, u32)> = g.e_xy.iter().copied().collect();
    let s_xz: HashSet<(u32, u32)> = g.e_xz.iter().copied().collect();
    let s_yz: HashSet<(u32, u32)> = g.e_yz.iter().copied().collect();
    let heavy_x: Vec<bool> = (0..g.nx).map(|v| xy[v].len() + xz[v].len() > thr).collect();
    let heavy_y: Vec<bool> = (0..g.ny).map(|v| yx[v].len() + yz[v].len() > thr).collect();
    let heavy_z: Vec<bool> = (0..g.nz).map(|v| zx[v].len() + zy[v].len() > thr).collect();
    let mut tri = vec![0u64; g.nx];

    // light y
    for y in (0..g.ny).filter(|&y| !heavy_y[y]) {
        for &x in &yx[y] {
            for &z in &yz[y] {
                if s_xz.contains(&(x, z)) {
                    tri[x as usize] += 1;
                }
            }
        }
    }
    // light x, heavy y
    for x in (0..g.nx).filter(|&x| !heavy_x[x]) {
        for &y in xy[x].iter().filter(|&&y| heavy_y[y as usize]) {
            for &z in &xz[x] {
                if s_yz.contains(&(y, z)) {
                    tri[x] += 1;
                }
            }
        }
    }
    // light z, heavy x and y
    for z in (0..g.nz).filter(|&z| !heavy_z[z]) {
        for &x in zx[z].iter().filter(|&&x| heavy_x[x as usize]) {
            for &y in zy[z].iter().filter(|&&y| heavy_y[y as usize]) {
                if s_xy.contains(&(x, y)) {
                    tri[x as usize] += 1;
                }
            }
        }
    }
    // all heavy
    let hx: Vec<u32> = (0..g.nx as u32).filter(|&v| heavy_x[v as usize]).collect();
    let hy: Vec<u32> = (0..g.ny as u32).filter(|&v| heavy_y[v as usize]).collect();
    let hz: Vec<u32> = (0..g.nz as u32).filter(|&v| heavy_z[v as usize]).collect();
    let heavy = hx.len() + hy.len() + hz.len();
    debug_assert!(thr == 0 || heavy <= 2 * m / thr);
    for &x in &hx {
        for &y in hy.iter().filter(|&&y| s_xy.contains(&(x, y))) {
            for &z in &hz {
                if s_xz.contains(&(x, z)) && s_yz.contains(&(y, z)) {
                    tri[x as usize] += 1;
                }
            }
        }
    }
    (
        tri,
        TriangleStats {
            threshold: thr,
            heavy,
        },
    )
}

/// `psi(x) = #{(y, z) : phi(E(x,y), E(x,z), E(y,z))}` for every x.
pub fn triangle_counts(g: &TripartiteGraph, phi: TruthTable) -> Vec<u64> {
    triangle_counts_with_stats(g, phi).0
}

pub fn triangle_counts_with_stats(g: &TripartiteGraph, phi: TruthTable) -> (Vec<u64>, TriangleStats) {
    let alpha = and_basis_coefficients(phi);
    let (ny, nz) = (g.ny as i64, g.nz as i64);
    let mut dxy = vec![0i64; g.nx];
    let mut dxz = vec![0i64; g.nx];
    let mut dyz_y = vec![0i64; g.ny];
    let mut dyz_z = vec![0i64; g.nz];
    for &(x, _) in &g.e_xy {
        dxy[x as usize] += 1;
    }
    for &(x, _) in &g.e_xz {
        dxz[x as usize] += 1;
    }
    for &(y, z) in &g.e_yz {
        dyz_y[y as usize] += 1;
        dyz_z[z as usize] += 1;
    }
    // psi_{13}(x) = sum_{y ~ x} deg_Z(y), psi_{23}(x) = sum_{z ~ x} deg_Y(z)
    let mut p13 = vec![0i64; g.nx];
    let mut p23 = vec![0i64; g.nx];
    for &(x, y) in &g.e_xy {
        p13[x as usize] += dyz_y[y as usize];
    }
    for &(x, z) in &g.e_xz {
        p23[x as usize] += dyz_z[z as usize];
    }
    let (tri, stats) = if alpha.coefficient(7) != 0 {
        triangles_per_x(g)
    } else {
        (vec![0; g.nx], TriangleStats::default())
    };
    let eyz = g.e_yz.len() as i64;
    let out = (0..g.nx)
        .map(|x| {
            let psi = [
                ny * nz,
                dxy[x] * nz,
                ny * dxz[x],
                dxy[x] * dxz[x],
                eyz,
                p13[x],
                p23[x],
                tri[x] as i64,
            ];
            let v: i64 = (0..8).map(|s| alpha.coefficients[s] * psi[s]).sum();
            debug_assert!(v >= 0);
            v as u64
        })
        .collect();
    (out, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_triangle() {
        let g = TripartiteGraph::new(1, 1, 1, vec![(0, 0)], vec![(0, 0)], vec![(0, 0)]);
        assert_eq!(triangle_counts(&g, 0x80), vec![1]);
        // a1 & a2 & !a3 holds only at index 3
        assert_eq!(triangle_counts(&g, 1 << 3), vec![0]);
    }

    #[test]
    fn ceil_sqrt_exact() {
        for m in 0..2000 {
            let r = ceil_sqrt(m);
            assert!(r * r >= m && (r == 0 || (r - 1) * (r - 1) < m));
        }
    }
}
