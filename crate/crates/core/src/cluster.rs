//! Tolerance clustering of (complex) eigenvalues.

use num_complex::Complex64;

use crate::tensorcore::TensorError;

/// A group of nearby eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    /// Multiplicity-weighted mean; snapped to the real axis when the
    /// imaginary part is within the merge radius.
    pub value: Complex64,
    pub multiplicity: usize,
    /// Indices into the input list.
    pub members: Vec<usize>,
}

/// Merge values closer than `tol * scale / 100`; distinct groups must be at
/// least `10 * tol * scale` apart. A pair in the band between cannot be
/// assigned confidently and is reported. Groups are ordered by real part,
/// then imaginary part.
pub fn cluster_values(items: &[(Complex64, usize)], tol: f64, scale: f64) -> Result<Vec<Group>, TensorError> {
    let lo = 0.01 * tol * scale;
    let hi = 10.0 * tol * scale;
    let n = items.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (items[i].0 - items[j].0).norm();
            if d < lo {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (items[i].0 - items[j].0).norm();
            if d >= lo && d < hi && find(&mut parent, i) != find(&mut parent, j) {
                return Err(TensorError::AmbiguousClustering { distance: d, lo, hi });
            }
        }
    }
    let mut groups: Vec<Group> = Vec::new();
    let mut root_of: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_of.iter().find(|(root, _)| *root == r) {
            Some(&(_, g)) => groups[g].members.push(i),
            None => {
                root_of.push((r, groups.len()));
                groups.push(Group {
                    value: Complex64::new(0.0, 0.0),
                    multiplicity: 0,
                    members: vec![i],
                });
            }
        }
    }
    for g in &mut groups {
        let m: usize = g.members.iter().map(|&i| items[i].1).sum();
        let sum: Complex64 = g.members.iter().map(|&i| items[i].0 * items[i].1 as f64).sum();
        let mut v = sum / m as f64;
        if v.im.abs() < lo {
            v.im = 0.0;
        }
        g.value = v;
        g.multiplicity = m;
    }
    groups.sort_by(|a, b| {
        a.value
            .re
            .partial_cmp(&b.value.re)
            .unwrap()
            .then(a.value.im.partial_cmp(&b.value.im).unwrap())
    });
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> (Complex64, usize) {
        (Complex64::new(re, 0.0), 1)
    }

    #[test]
    fn merges_close_values() {
        let g = cluster_values(&[c(1.0), c(5.0), c(1.0 + 1e-12)], 1e-6, 5.0).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].multiplicity, 2);
        assert!((g[0].value.re - 1.0).abs() < 1e-11);
    }

    #[test]
    fn grey_zone_is_an_error() {
        assert!(matches!(
            cluster_values(&[c(0.0), c(1e-7)], 1e-6, 1.0),
            Err(TensorError::AmbiguousClustering { .. })
        ));
    }
}
