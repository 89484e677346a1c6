use std::collections::HashMap;

use super::{BoundaryGeometry, Polyline, ScalarField, ScalarFieldGrid};
use crate::error::{Error, Result};

/// Marching squares over every grid cell.
///
/// Crossings are linearly interpolated along cell edges. Ambiguous saddle
/// cells are resolved by the sign at the cell centre, taken from `source` when
/// available and from the mean of the four corners otherwise. Segments are
/// chained into polylines; closed loops repeat their first vertex.
pub fn extract_zero_level_2d(
    field: &ScalarFieldGrid,
    source: Option<&dyn ScalarField>,
) -> Result<BoundaryGeometry> {
    if field.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: field.dim(),
        });
    }
    let spec = field.spec();
    let (nx, ny) = (spec.resolution()[0], spec.resolution()[1]);
    let v = field.values();
    let at = |i: usize, j: usize| v[i * ny + j];

    let mut builder = Chainer::default();
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            // Corners counter-clockwise from (i, j).
            let c = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            let case = c
                .iter()
                .enumerate()
                .fold(0u8, |acc, (k, &val)| acc | (((val >= 0.0) as u8) << k));
            if case == 0 || case == 15 {
                continue;
            }
            // Edge k joins corner k and corner (k + 1) % 4.
            let edge_id = |k: usize| -> u64 {
                let (ei, ej, vertical) = match k {
                    0 => (i, j, false),
                    1 => (i + 1, j, true),
                    2 => (i, j + 1, false),
                    _ => (i, j, true),
                };
                2 * (ei * ny + ej) as u64 + vertical as u64
            };
            let point = |k: usize| -> [f64; 2] {
                let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
                let (a, b) = (corners[k], corners[(k + 1) % 4]);
                let (va, vb) = (c[k], c[(k + 1) % 4]);
                let t = va / (va - vb);
                let pa = [spec.coord(0, a.0), spec.coord(1, a.1)];
                let pb = [spec.coord(0, b.0), spec.coord(1, b.1)];
                [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
            };
            let mut segment = |e0: usize, e1: usize| {
                let a = builder.vertex(edge_id(e0), || point(e0));
                let b = builder.vertex(edge_id(e1), || point(e1));
                builder.link(a, b);
            };
            match case {
                5 | 10 => {
                    let centre = match source {
                        Some(src) => {
                            let x = [
                                0.5 * (spec.coord(0, i) + spec.coord(0, i + 1)),
                                0.5 * (spec.coord(1, j) + spec.coord(1, j + 1)),
                            ];
                            src.eval(&x)?
                        }
                        None => 0.25 * c.iter().sum::<f64>(),
                    };
                    // Inside centre joins the inside corners, so the cuts go
                    // around the outside ones; otherwise around the inside ones.
                    let around_corner_one = (case == 5) == (centre >= 0.0);
                    if around_corner_one {
                        segment(0, 1);
                        segment(2, 3);
                    } else {
                        segment(3, 0);
                        segment(1, 2);
                    }
                }
                _ => {
                    let crossing: Vec<usize> = (0..4)
                        .filter(|&k| (c[k] >= 0.0) != (c[(k + 1) % 4] >= 0.0))
                        .collect();
                    debug_assert_eq!(crossing.len(), 2);
                    segment(crossing[0], crossing[1]);
                }
            }
        }
    }
    Ok(BoundaryGeometry::Polylines {
        polylines: builder.chains(),
    })
}

/// Collects segment endpoints keyed by grid edge and walks them into chains.
#[derive(Default)]
struct Chainer {
    index: HashMap<u64, usize>,
    points: Vec<[f64; 2]>,
    links: Vec<[Option<usize>; 2]>,
}

impl Chainer {
    fn vertex(&mut self, edge: u64, make: impl FnOnce() -> [f64; 2]) -> usize {
        *self.index.entry(edge).or_insert_with(|| {
            self.points.push(make());
            self.links.push([None, None]);
            self.points.len() - 1
        })
    }

    fn link(&mut self, a: usize, b: usize) {
        for (from, to) in [(a, b), (b, a)] {
            let slot = &mut self.links[from];
            if slot[0].is_none() {
                slot[0] = Some(to);
            } else {
                debug_assert!(slot[1].is_none(), "grid edge shared by more than two segments");
                slot[1] = Some(to);
            }
        }
    }

    fn degree(&self, v: usize) -> usize {
        self.links[v].iter().flatten().count()
    }

    fn chains(self) -> Vec<Polyline> {
        let n = self.points.len();
        let mut used = vec![false; n];
        let mut out = Vec::new();
        // Open chains start at an endpoint; whatever remains is a loop.
        let starts: Vec<usize> = (0..n)
            .filter(|&v| self.degree(v) == 1)
            .chain(0..n)
            .collect();
        for start in starts {
            if used[start] {
                continue;
            }
            let mut verts = vec![self.points[start]];
            used[start] = true;
            let mut prev = usize::MAX;
            let mut cur = start;
            let mut closed = false;
            loop {
                let next = self.links[cur]
                    .iter()
                    .flatten()
                    .copied()
                    .find(|&w| w != prev && !used[w]);
                match next {
                    Some(w) => {
                        used[w] = true;
                        verts.push(self.points[w]);
                        prev = cur;
                        cur = w;
                    }
                    None => {
                        if verts.len() > 2 && self.links[cur].iter().flatten().any(|&w| w == start) {
                            closed = true;
                            verts.push(self.points[start]);
                        }
                        break;
                    }
                }
            }
            if verts.len() >= 2 {
                out.push(Polyline {
                    vertices: verts,
                    closed,
                });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levelset::{FnField, GridSpec};

    fn polylines(g: BoundaryGeometry) -> Vec<Polyline> {
        match g {
            BoundaryGeometry::Polylines { polylines } => polylines,
            _ => panic!("expected polylines"),
        }
    }

    #[test]
    fn unit_circle() {
        let spec = GridSpec::cube(2, -2.0, 2.0, 201).unwrap();
        let field = ScalarFieldGrid::from_fn(spec, |x| 1.0 - x[0] * x[0] - x[1] * x[1]).unwrap();
        let lines = polylines(extract_zero_level_2d(&field, None).unwrap());
        assert_eq!(lines.len(), 1);
        let line = &lines[0];
        assert!(line.closed);
        assert_eq!(line.vertices.first(), line.vertices.last());
        for v in &line.vertices {
            assert!(((v[0] * v[0] + v[1] * v[1]).sqrt() - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn constant_field_is_empty() {
        let spec = GridSpec::cube(2, -1.0, 1.0, 20).unwrap();
        let field = ScalarFieldGrid::from_fn(spec, |_| 1.0).unwrap();
        assert!(extract_zero_level_2d(&field, None).unwrap().is_empty());
    }

    #[test]
    fn linear_field_gives_straight_line() {
        let spec = GridSpec::cube(2, -1.0, 1.0, 40).unwrap();
        let field = ScalarFieldGrid::from_fn(spec, |x| x[0]).unwrap();
        let lines = polylines(extract_zero_level_2d(&field, None).unwrap());
        assert_eq!(lines.len(), 1);
        assert!(!lines[0].closed);
        assert_eq!(lines[0].vertices.len(), 40);
        assert!(lines[0].vertices.iter().all(|v| v[0].abs() <= 1e-12));
    }

    #[test]
    fn saddle_uses_centre_sample() {
        // Corners alternate in sign; the true field is positive at the centre.
        let spec = GridSpec::cube(2, 0.0, 1.0, 2).unwrap();
        let field = ScalarFieldGrid::new(spec, vec![1.0, -1.0, -1.0, 1.0]).unwrap();
        let positive = FnField::new(2, |_| 5.0);
        let negative = FnField::new(2, |_| -5.0);
        let joined = polylines(extract_zero_level_2d(&field, Some(&positive)).unwrap());
        let split = polylines(extract_zero_level_2d(&field, Some(&negative)).unwrap());
        assert_eq!(joined.len(), 2);
        assert_eq!(split.len(), 2);
        // Node (0,0) and (1,1) are inside. With a positive centre the cuts
        // isolate the outside corners (1,0) and (0,1).
        let near = |lines: &[Polyline], corner: [f64; 2]| {
            lines.iter().any(|l| {
                l.vertices
                    .iter()
                    .all(|v| (v[0] - corner[0]).abs() <= 0.5 && (v[1] - corner[1]).abs() <= 0.5)
            })
        };
        assert!(near(&joined, [1.0, 0.0]) && near(&joined, [0.0, 1.0]));
        assert!(near(&split, [0.0, 0.0]) && near(&split, [1.0, 1.0]));
    }

    #[test]
    fn two_disjoint_loops() {
        let spec = GridSpec::new(vec![-3.0, -1.5], vec![3.0, 1.5], vec![121, 61]).unwrap();
        let field = ScalarFieldGrid::from_fn(spec, |x| {
            let a = 1.0 - (x[0] + 1.5).powi(2) - x[1] * x[1];
            let b = 1.0 - (x[0] - 1.5).powi(2) - x[1] * x[1];
            a.max(b)
        })
        .unwrap();
        let lines = polylines(extract_zero_level_2d(&field, None).unwrap());
        assert_eq!(lines.len(), 2);
        assert!(lines.iter().all(|l| l.closed));
    }
}
