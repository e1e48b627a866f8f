use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered list of labeled tensor factors.
///
/// Amplitudes are laid out row-major over the factors: the first label is the
/// most significant index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct Signature {
    labels: Vec<String>,
    dims: Vec<usize>,
}

impl Signature {
    pub fn new<S: Into<String>>(parts: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let mut labels = Vec::new();
        let mut dims = Vec::new();
        for (label, dim) in parts {
            let label = label.into();
            if dim == 0 {
                return Err(Error::DimensionMismatch(format!("subsystem `{label}` has dimension 0")));
            }
            if labels.contains(&label) {
                return Err(Error::DuplicateLabel(label));
            }
            labels.push(label);
            dims.push(dim);
        }
        Ok(Self { labels, dims })
    }

    pub fn from_parts(labels: Vec<String>, dims: Vec<usize>) -> Result<Self> {
        if labels.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels but {} dimensions",
                labels.len(),
                dims.len()
            )));
        }
        Self::new(labels.into_iter().zip(dims))
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Product of all dimensions (1 for the empty signature).
    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.dims[self.position(label)?])
    }

    pub fn concat(&self, other: &Signature) -> Result<Signature> {
        Signature::new(
            self.labels
                .iter()
                .chain(&other.labels)
                .cloned()
                .zip(self.dims.iter().chain(&other.dims).copied()),
        )
    }

    /// Sub-signature made of `labels`, in the given order.
    pub fn select<S: AsRef<str>>(&self, labels: &[S]) -> Result<Signature> {
        let mut parts = Vec::with_capacity(labels.len());
        for l in labels {
            let l = l.as_ref();
            parts.push((l.to_string(), self.dim_of(l)?));
        }
        Signature::new(parts)
    }

    /// Labels not in `labels`, in signature order.
    pub fn complement<S: AsRef<str>>(&self, labels: &[S]) -> Vec<String> {
        self.labels
            .iter()
            .filter(|l| !labels.iter().any(|k| k.as_ref() == l.as_str()))
            .cloned()
            .collect()
    }

    pub fn relabel(&self, from: &str, to: &str) -> Result<Signature> {
        let pos = self.position(from)?;
        let mut labels = self.labels.clone();
        labels[pos] = to.to_string();
        Signature::from_parts(labels, self.dims.clone())
    }

    /// Positions of `first` followed by the remaining factors in their current order.
    pub(crate) fn order_with_front<S: AsRef<str>>(&self, first: &[S]) -> Result<Vec<usize>> {
        let mut order = Vec::with_capacity(self.len());
        for l in first {
            let p = self.position(l.as_ref())?;
            if order.contains(&p) {
                return Err(Error::DuplicateLabel(l.as_ref().to_string()));
            }
            order.push(p);
        }
        let rest: Vec<usize> = (0..self.len()).filter(|p| !order.contains(p)).collect();
        order.extend(rest);
        Ok(order)
    }

    /// Positions that reorder `self` into exactly `labels`, which must be a permutation.
    pub(crate) fn order_exact<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        if labels.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot reorder {:?} into {:?}",
                self.labels,
                labels.iter().map(|l| l.as_ref()).collect::<Vec<_>>()
            )));
        }
        self.order_with_front(labels)
    }

    pub(crate) fn permuted(&self, order: &[usize]) -> Signature {
        Signature {
            labels: order.iter().map(|&p| self.labels[p].clone()).collect(),
            dims: order.iter().map(|&p| self.dims[p]).collect(),
        }
    }
}

/// For a permutation `order` of the factors with dimensions `dims`, returns the table
/// `t` with `t[new_index] = old_index`.
pub(crate) fn permutation_table(dims: &[usize], order: &[usize]) -> Vec<usize> {
    let n = dims.len();
    let mut strides = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let new_dims: Vec<usize> = order.iter().map(|&p| dims[p]).collect();
    let new_strides: Vec<usize> = order.iter().map(|&p| strides[p]).collect();
    let total: usize = dims.iter().product();

    let mut table = Vec::with_capacity(total);
    let mut counter = vec![0usize; n];
    let mut old = 0usize;
    for _ in 0..total {
        table.push(old);
        // odometer increment over the new layout
        for k in (0..n).rev() {
            counter[k] += 1;
            old += new_strides[k];
            if counter[k] < new_dims[k] {
                break;
            }
            old -= new_strides[k] * new_dims[k];
            counter[k] = 0;
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_zero_dims() {
        assert!(matches!(Signature::new([("A", 2), ("A", 3)]), Err(Error::DuplicateLabel(_))));
        assert!(Signature::new([("A", 0)]).is_err());
    }

    #[test]
    fn permutation_table_swaps_factors() {
        // dims (2,3): old index = a*3 + b; new order (b, a): new index = b*2 + a
        let t = permutation_table(&[2, 3], &[1, 0]);
        for a in 0..2 {
            for b in 0..3 {
                assert_eq!(t[b * 2 + a], a * 3 + b);
            }
        }
    }

    #[test]
    fn identity_permutation() {
        let t = permutation_table(&[2, 2, 3], &[0, 1, 2]);
        assert_eq!(t, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn complement_keeps_order() {
        let s = Signature::new([("R", 3), ("A", 11), ("B", 11)]).unwrap();
        assert_eq!(s.complement(&["A"]), vec!["R".to_string(), "B".to_string()]);
        assert_eq!(s.order_with_front(&["B"]).unwrap(), vec![2, 0, 1]);
    }
}
