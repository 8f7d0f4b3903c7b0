//! Everything fixed for one `(n, PT, lambda)`: lattice tables, canonical prototiles,
//! the scaling map and the two substitution matrices.

use crate::cyclotomic::{self, AngleTriple, Field, FieldElement, InflationFactor};
use crate::error::{Error, Result};
use crate::geometry::{self, Lattice, LatticePoint, RigidMotion, Scaling, Triangle};
use crate::matrix::IntMatrix;
use std::sync::Arc;

#[derive(Debug)]
pub struct Problem {
    pub lattice: Lattice,
    pub protos: Vec<AngleTriple>,
    pub canon: Vec<Triangle>,
    /// Direction index of the counterclockwise edge `V_{i+1} -> V_{i+2}` per prototile.
    pub edge_dirs: Vec<[u32; 3]>,
    /// Length class of edge `i` per prototile.
    pub edge_classes: Vec<[u32; 3]>,
    pub lambda: InflationFactor,
    pub scaling: Scaling,
    /// Length substitution matrix; row and column `c - 1` belong to class `a_c`.
    pub x: IntMatrix,
    /// Tile substitution matrix, or the reason it is inadmissible.
    pub m: std::result::Result<IntMatrix, Error>,
    pub areas: Vec<FieldElement>,
    /// For isosceles prototiles: the vertex transposition of the symmetry axis and the
    /// lattice motion realizing it on the canonical prototile.
    pub axis: Vec<Option<([usize; 3], RigidMotion)>>,
}

impl Problem {
    /// Validates `n`, the prototiles and `lambda`. An inadmissible `M` is kept as an
    /// error value so that callers can decide whether to refuse or run empty.
    pub fn new(n: u32, protos: &[AngleTriple], lambda_coeffs: &[u32]) -> Result<Self> {
        let field = Arc::new(Field::new(n)?);
        let lattice = Lattice::new(field.clone())?;
        let lambda = InflationFactor::new(&field, lambda_coeffs)?;
        lambda.ensure_expanding(&field)?;
        if protos.is_empty() {
            return Err(Error::Config("empty prototile set".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for t in protos {
            let [a, b, c] = t.angles();
            let t = AngleTriple::new(n, a, b, c)?;
            if !seen.insert(t.sorted()) {
                return Err(Error::Config(format!("prototile {t} listed twice")));
            }
        }
        let canon = protos
            .iter()
            .map(|&t| lattice.canonical_prototile(t))
            .collect::<Result<Vec<_>>>()?;
        let edge_dirs = protos
            .iter()
            .map(|&t| geometry::canonical_edge_directions(n, t))
            .collect();
        let edge_classes = protos
            .iter()
            .map(|t| t.angles().map(|k| cyclotomic::length_class(n, k)))
            .collect();
        let scaling = lattice.scaling(&lambda);
        let x = cyclotomic::length_matrix_int(&field, &lambda)?;
        let m = cyclotomic::substitution_matrix(&field, protos, &lambda);
        if let Err(e @ Error::AreasNotABasis) = &m {
            return Err(e.clone());
        }
        let areas = protos
            .iter()
            .map(|&t| cyclotomic::area_vector(&field, t))
            .collect::<Result<Vec<_>>>()?;
        let axis = canon.iter().map(|t| axis_symmetry(&lattice, t)).collect();
        Ok(Problem {
            lattice,
            protos: protos.to_vec(),
            canon,
            edge_dirs,
            edge_classes,
            lambda,
            scaling,
            x,
            m,
            areas,
            axis,
        })
    }

    pub fn n(&self) -> u32 {
        self.lattice.n()
    }

    pub fn field(&self) -> &Arc<Field> {
        self.lattice.field()
    }

    pub fn num_protos(&self) -> usize {
        self.protos.len()
    }

    pub fn num_vars(&self) -> usize {
        3 * self.protos.len()
    }

    /// Orientation variable of edge `i` of prototile `p`.
    pub fn var(p: usize, i: usize) -> usize {
        3 * p + i
    }

    pub fn substitution_matrix(&self) -> Result<&IntMatrix> {
        self.m.as_ref().map_err(Clone::clone)
    }

    /// Column `t0` of `M`: how many copies of each prototile fill `lambda t0`.
    pub fn multiplicities(&self, t0: usize) -> Result<Vec<u32>> {
        let m = self.substitution_matrix()?;
        Ok(m.column(t0).into_iter().map(|v| v as u32).collect())
    }

    /// `lambda t0` with the labels of the canonical prototile.
    pub fn inflated(&self, t0: usize) -> Triangle {
        let t = &self.canon[t0];
        Triangle {
            angles: t.angles,
            vertices: t.vertices.map(|v| self.scaling.apply(&v)),
        }
    }

    /// Labeled vertices of a placed copy of prototile `p`.
    pub fn tile_vertices(&self, p: usize, g: &RigidMotion) -> [LatticePoint; 3] {
        self.canon[p]
            .vertices
            .map(|v| self.lattice.apply_motion(g, &v))
    }

    /// Direction index of edge `i` of prototile `p` under `g`, read from the image of
    /// `V_{i+1}` to the image of `V_{i+2}`.
    pub fn edge_direction(&self, p: usize, i: usize, g: &RigidMotion) -> u32 {
        let two_n = 2 * self.n();
        let m = self.edge_dirs[p][i];
        if g.flip {
            (g.rot + two_n - m) % two_n
        } else {
            (g.rot + m) % two_n
        }
    }

    pub fn is_isosceles(&self, p: usize) -> bool {
        self.axis[p].is_some()
    }
}

/// Transposition of the two equal-angle vertices and the motion swapping them.
fn axis_symmetry(lattice: &Lattice, t: &Triangle) -> Option<([usize; 3], RigidMotion)> {
    let k = t.angles.angles();
    let perm = if k[0] == k[1] {
        [1, 0, 2]
    } else if k[1] == k[2] {
        [0, 2, 1]
    } else if k[0] == k[2] {
        [2, 1, 0]
    } else {
        return None;
    };
    for rot in 0..2 * lattice.n() {
        let lin = RigidMotion {
            rot,
            flip: true,
            shift: LatticePoint::ZERO,
        };
        let shift = t.vertices[perm[0]].sub(&lattice.apply_motion(&lin, &t.vertices[0]));
        let g = RigidMotion { shift, ..lin };
        if (0..3).all(|i| lattice.apply_motion(&g, &t.vertices[i]) == t.vertices[perm[i]]) {
            return Some((perm, g));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seven() -> Problem {
        Problem::new(7, &geometry::special_set(7), &[1, 1, 0]).unwrap()
    }

    #[test]
    fn sevenfold_context() {
        let p = seven();
        assert_eq!(p.multiplicities(0).unwrap(), vec![3, 1, 2]);
        assert_eq!(p.x.0, vec![vec![1, 1, 0], vec![1, 1, 1], vec![0, 1, 2]]);
        assert_eq!(p.edge_classes[0], [1, 2, 3]);
        assert_eq!(p.edge_classes[1], [1, 3, 3]);
        assert!(!p.is_isosceles(0) && p.is_isosceles(1) && p.is_isosceles(2));
    }

    #[test]
    fn axis_motion_swaps_equal_vertices() {
        let p = seven();
        for (q, a) in p.axis.iter().enumerate() {
            if let Some((perm, g)) = a {
                let v = p.tile_vertices(q, g);
                for i in 0..3 {
                    assert_eq!(v[i], p.canon[q].vertices[perm[i]]);
                }
            }
        }
    }

    #[test]
    fn edge_directions_follow_motions() {
        let p = seven();
        for q in 0..3 {
            for rot in 0..14 {
                for flip in [false, true] {
                    let g = RigidMotion {
                        rot,
                        flip,
                        shift: LatticePoint::ZERO,
                    };
                    let v = p.tile_vertices(q, &g);
                    for i in 0..3 {
                        let d = p.edge_direction(q, i, &g);
                        let c = p.edge_classes[q][i];
                        let want = v[(i + 2) % 3].sub(&v[(i + 1) % 3]);
                        assert_eq!(p.lattice.scaled_direction(c, i64::from(d)), want);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Problem::new(9, &[], &[1, 1, 0]).is_err());
        assert!(Problem::new(7, &geometry::special_set(7), &[1, 0, 0]).is_err());
        let dup = [
            AngleTriple([1, 2, 4]),
            AngleTriple([1, 2, 4]),
            AngleTriple([2, 2, 3]),
        ];
        assert!(Problem::new(7, &dup, &[1, 1, 0]).is_err());
    }
}
