use super::ScalarFieldGrid;

/// Face-connected components of the `{v >= 0}` nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub count: usize,
    /// `0` for nodes outside the region, otherwise a label in `1..=count`.
    pub labels: Vec<u32>,
}

impl Components {
    pub fn label_at(&self, node: usize) -> Option<u32> {
        match self.labels[node] {
            0 => None,
            l => Some(l),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count];
        for &l in &self.labels {
            if l > 0 {
                sizes[l as usize - 1] += 1;
            }
        }
        sizes
    }
}

pub fn connected_components(field: &ScalarFieldGrid) -> Components {
    let spec = field.spec();
    let inside = field.mask_at_least(0.0);
    let strides = spec.strides();
    let res = spec.resolution();
    let mut labels = vec![0u32; inside.len()];
    let mut count = 0u32;
    let mut stack = Vec::new();
    for seed in 0..inside.len() {
        if !inside[seed] || labels[seed] != 0 {
            continue;
        }
        count += 1;
        labels[seed] = count;
        stack.push(seed);
        while let Some(k) = stack.pop() {
            let idx = spec.multi_index(k);
            for axis in 0..spec.dim() {
                let mut visit = |nb: usize| {
                    if inside[nb] && labels[nb] == 0 {
                        labels[nb] = count;
                        stack.push(nb);
                    }
                };
                if idx[axis] > 0 {
                    visit(k - strides[axis]);
                }
                if idx[axis] + 1 < res[axis] {
                    visit(k + strides[axis]);
                }
            }
        }
    }
    Components {
        count: count as usize,
        labels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levelset::GridSpec;

    #[test]
    fn negative_field_has_none() {
        let f = ScalarFieldGrid::from_fn(GridSpec::cube(2, 0.0, 1.0, 8).unwrap(), |_| -1.0).unwrap();
        let c = connected_components(&f);
        assert_eq!(c.count, 0);
        assert!(c.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn blobs_separated_by_a_band() {
        for dim in 1..=3 {
            let spec = GridSpec::cube(dim, -3.0, 3.0, 31).unwrap();
            let f = ScalarFieldGrid::from_fn(spec, |x| x[0].abs() - 1.0).unwrap();
            let c = connected_components(&f);
            assert_eq!(c.count, 2, "d = {dim}");
            assert_eq!(c.sizes()[0], c.sizes()[1]);
        }
    }

    #[test]
    fn diagonal_contact_does_not_connect() {
        let spec = GridSpec::cube(2, 0.0, 1.0, 2).unwrap();
        let f = ScalarFieldGrid::new(spec, vec![1.0, -1.0, -1.0, 1.0]).unwrap();
        assert_eq!(connected_components(&f).count, 2);
    }
}
