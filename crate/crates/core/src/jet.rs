//! Index conventions, jet points and dense d-tensor storage.
//!
//! Temporal indices run over `0..p`, spatial indices over `0..n`. A vertical
//! index is a pair `(i, α)` stored flattened as `i * p + α`, both in
//! [`JetPoint::v`] and in vertical tensor slots.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{Dual, Scalar};

/// Dimensions of the temporal (`p`) and spatial (`n`) manifolds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Dims {
    pub p: usize,
    pub n: usize,
}

impl Dims {
    pub fn new(p: usize, n: usize) -> Result<Self> {
        if p == 0 || n == 0 {
            return Err(Error::Dimension(format!(
                "p and n must be positive (got p={p}, n={n})"
            )));
        }
        Ok(Dims { p, n })
    }

    /// Number of jet coordinates `p + n + n·p`.
    #[inline]
    pub fn coord_count(&self) -> usize {
        self.p + self.n + self.n * self.p
    }

    #[inline]
    pub fn vertical(&self, i: usize, alpha: usize) -> usize {
        i * self.p + alpha
    }

    /// All coordinates in canonical order: `t`, then `x`, then `v` by `(i, α)`.
    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        let t = (0..self.p).map(Coord::T);
        let x = (0..self.n).map(Coord::X);
        let v = (0..self.n).flat_map(move |i| (0..self.p).map(move |a| Coord::V(i, a)));
        t.chain(x).chain(v)
    }

    pub fn coord_index(&self, c: Coord) -> usize {
        match c {
            Coord::T(a) => a,
            Coord::X(i) => self.p + i,
            Coord::V(i, a) => self.p + self.n + self.vertical(i, a),
        }
    }

    pub fn coord_at(&self, k: usize) -> Coord {
        if k < self.p {
            Coord::T(k)
        } else if k < self.p + self.n {
            Coord::X(k - self.p)
        } else {
            let r = k - self.p - self.n;
            Coord::V(r / self.p, r % self.p)
        }
    }

    pub fn check(&self, c: Coord) -> Result<()> {
        let ok = match c {
            Coord::T(a) => a < self.p,
            Coord::X(i) => i < self.n,
            Coord::V(i, a) => i < self.n && a < self.p,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension(format!("coordinate {c} out of range for {self:?}")))
        }
    }
}

/// One jet coordinate: `t^α`, `x^i` or `x^i_α` (zero-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coord {
    T(usize),
    X(usize),
    V(usize, usize),
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Coord::T(a) => write!(f, "t{}", a + 1),
            Coord::X(i) => write!(f, "x{}", i + 1),
            Coord::V(i, a) => write!(f, "v{}_{}", i + 1, a + 1),
        }
    }
}

/// A point `(t^α, x^i, x^i_α)` of the first-order jet bundle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JetPoint<S = f64> {
    pub t: Vec<S>,
    pub x: Vec<S>,
    /// Partial velocities, `v[i * p + α] = x^i_α`.
    pub v: Vec<S>,
}

impl JetPoint<f64> {
    pub fn new(dims: Dims, t: Vec<f64>, x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if t.len() != dims.p || x.len() != dims.n || v.len() != dims.n * dims.p {
            return Err(Error::Dimension(format!(
                "jet point lengths (t={}, x={}, v={}) do not match {dims:?}",
                t.len(),
                x.len(),
                v.len()
            )));
        }
        let pt = JetPoint { t, x, v };
        if pt.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("jet point has non-finite entries".into()));
        }
        Ok(pt)
    }

    pub fn zeros(dims: Dims) -> Self {
        JetPoint {
            t: vec![0.0; dims.p],
            x: vec![0.0; dims.n],
            v: vec![0.0; dims.n * dims.p],
        }
    }

    /// Builds a point from the flat canonical coordinate vector.
    pub fn from_flat(dims: Dims, flat: &[f64]) -> Self {
        let (t, rest) = flat.split_at(dims.p);
        let (x, v) = rest.split_at(dims.n);
        JetPoint {
            t: t.to_vec(),
            x: x.to_vec(),
            v: v.to_vec(),
        }
    }
}

impl<S: Scalar> JetPoint<S> {
    pub fn dims(&self) -> Dims {
        Dims {
            p: self.t.len(),
            n: self.x.len(),
        }
    }

    pub fn get(&self, c: Coord) -> S {
        match c {
            Coord::T(a) => self.t[a],
            Coord::X(i) => self.x[i],
            Coord::V(i, a) => self.v[i * self.t.len() + a],
        }
    }

    pub fn set(&mut self, c: Coord, value: S) {
        let p = self.t.len();
        match c {
            Coord::T(a) => self.t[a] = value,
            Coord::X(i) => self.x[i] = value,
            Coord::V(i, a) => self.v[i * p + a] = value,
        }
    }

    /// Velocity component `x^i_α`.
    #[inline]
    pub fn vel(&self, i: usize, alpha: usize) -> S {
        self.v[i * self.t.len() + alpha]
    }

    pub fn iter(&self) -> impl Iterator<Item = &S> {
        self.t.iter().chain(&self.x).chain(&self.v)
    }

    pub fn map<T>(&self, f: impl Fn(S) -> T) -> JetPoint<T> {
        JetPoint {
            t: self.t.iter().map(|&s| f(s)).collect(),
            x: self.x.iter().map(|&s| f(s)).collect(),
            v: self.v.iter().map(|&s| f(s)).collect(),
        }
    }

    /// Lifts into dual numbers with unit sensitivity along `c`.
    pub fn seeded(&self, c: Coord) -> JetPoint<Dual<S>> {
        let mut out = self.map(Dual::constant);
        let mut d = out.get(c);
        d.eps = S::one();
        out.set(c, d);
        out
    }

    /// Same point with every partial velocity set to zero.
    pub fn with_zero_velocity(&self) -> Self {
        let mut out = self.clone();
        out.v.iter_mut().for_each(|v| *v = S::zero());
        out
    }

    pub fn primal(&self) -> JetPoint<f64> {
        self.map(|s| s.re())
    }
}

/// Kind of a tensor index slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SlotKind {
    TemporalUpper,
    TemporalLower,
    SpatialUpper,
    SpatialLower,
    /// Spatial-upper × temporal-lower pair `(i, α)`, like `x^i_α`.
    VerticalUpper,
    /// Spatial-lower × temporal-upper pair, like `∂/∂x^i_α` as a covector slot.
    VerticalLower,
}

impl SlotKind {
    pub fn is_upper(self) -> bool {
        matches!(
            self,
            SlotKind::TemporalUpper | SlotKind::SpatialUpper | SlotKind::VerticalUpper
        )
    }

    pub fn dual(self) -> SlotKind {
        match self {
            SlotKind::TemporalUpper => SlotKind::TemporalLower,
            SlotKind::TemporalLower => SlotKind::TemporalUpper,
            SlotKind::SpatialUpper => SlotKind::SpatialLower,
            SlotKind::SpatialLower => SlotKind::SpatialUpper,
            SlotKind::VerticalUpper => SlotKind::VerticalLower,
            SlotKind::VerticalLower => SlotKind::VerticalUpper,
        }
    }

    pub fn extent(self, dims: Dims) -> usize {
        match self {
            SlotKind::TemporalUpper | SlotKind::TemporalLower => dims.p,
            SlotKind::SpatialUpper | SlotKind::SpatialLower => dims.n,
            SlotKind::VerticalUpper | SlotKind::VerticalLower => dims.n * dims.p,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct IndexSlot {
    pub kind: SlotKind,
    pub extent: usize,
}

impl IndexSlot {
    pub fn new(kind: SlotKind, dims: Dims) -> Self {
        IndexSlot {
            kind,
            extent: kind.extent(dims),
        }
    }
}

/// Builds a slot list from kinds.
pub fn slots(dims: Dims, kinds: &[SlotKind]) -> Vec<IndexSlot> {
    kinds.iter().map(|&k| IndexSlot::new(k, dims)).collect()
}

/// Dense row-major multi-index array with declared slot valences.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DTensor {
    pub slots: Vec<IndexSlot>,
    pub data: Vec<f64>,
}

impl DTensor {
    pub fn new(slots: Vec<IndexSlot>) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::Dimension("tensor needs at least one slot".into()));
        }
        if let Some(s) = slots.iter().find(|s| s.extent == 0) {
            return Err(Error::Dimension(format!("zero-extent slot {:?}", s.kind)));
        }
        let len = slots.iter().map(|s| s.extent).product();
        Ok(DTensor {
            slots,
            data: vec![0.0; len],
        })
    }

    pub fn from_data(slots: Vec<IndexSlot>, data: Vec<f64>) -> Result<Self> {
        let mut t = DTensor::new(slots)?;
        if data.len() != t.data.len() {
            return Err(Error::Dimension(format!(
                "data length {} does not match extent product {}",
                data.len(),
                t.data.len()
            )));
        }
        t.data = data;
        Ok(t)
    }

    /// Rank-0 result of a full contraction.
    pub fn scalar(value: f64) -> Self {
        DTensor {
            slots: Vec::new(),
            data: vec![value],
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s.extent).collect()
    }

    pub fn offset(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.slots.len() {
            return Err(Error::Dimension(format!(
                "index of rank {} for tensor of rank {}",
                idx.len(),
                self.slots.len()
            )));
        }
        let mut off = 0;
        for (&i, s) in idx.iter().zip(&self.slots) {
            if i >= s.extent {
                return Err(Error::Dimension(format!("index {i} out of extent {}", s.extent)));
            }
            off = off * s.extent + i;
        }
        Ok(off)
    }

    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        Ok(self.data[self.offset(idx)?])
    }

    pub fn set(&mut self, idx: &[usize], value: f64) -> Result<()> {
        let off = self.offset(idx)?;
        self.data[off] = value;
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entrywise difference; `None` when shapes differ.
    pub fn max_abs_diff(&self, other: &DTensor) -> Option<f64> {
        if self.shape() != other.shape() {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .fold(0.0, |m, (a, b)| m.max((a - b).abs())),
        )
    }

    pub fn add(&self, other: &DTensor) -> Result<DTensor> {
        if self.slots != other.slots {
            return Err(Error::Dimension("slot mismatch in tensor sum".into()));
        }
        Ok(DTensor {
            slots: self.slots.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// Visits every multi-index in row-major order.
    pub fn indices(&self) -> MultiIndexIter {
        MultiIndexIter::new(self.shape())
    }
}

/// Row-major iterator over all multi-indices of a shape.
pub struct MultiIndexIter {
    shape: Vec<usize>,
    cur: Vec<usize>,
    done: bool,
}

impl MultiIndexIter {
    pub fn new(shape: Vec<usize>) -> Self {
        let done = shape.iter().any(|&e| e == 0);
        MultiIndexIter {
            cur: vec![0; shape.len()],
            shape,
            done,
        }
    }
}

impl Iterator for MultiIndexIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let mut k = self.shape.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.cur[k] += 1;
            if self.cur[k] < self.shape[k] {
                break;
            }
            self.cur[k] = 0;
        }
        Some(out)
    }
}

/// Contracts slot pairs `(slot of a, slot of b)`. Result slots are the
/// unpaired slots of `a` followed by the unpaired slots of `b`.
pub fn contract(a: &DTensor, b: &DTensor, pairs: &[(usize, usize)]) -> Result<DTensor> {
    for &(sa, sb) in pairs {
        let (Some(x), Some(y)) = (a.slots.get(sa), b.slots.get(sb)) else {
            return Err(Error::Contraction(format!("slot pair ({sa}, {sb}) out of range")));
        };
        if x.kind.dual() != y.kind {
            return Err(Error::Contraction(format!(
                "cannot contract {:?} with {:?}",
                x.kind, y.kind
            )));
        }
        if x.extent != y.extent {
            return Err(Error::Contraction(format!(
                "extent mismatch {} vs {}",
                x.extent, y.extent
            )));
        }
    }
    let mut seen_a = vec![false; a.slots.len()];
    let mut seen_b = vec![false; b.slots.len()];
    for &(sa, sb) in pairs {
        if std::mem::replace(&mut seen_a[sa], true) || std::mem::replace(&mut seen_b[sb], true) {
            return Err(Error::Contraction("slot used twice".into()));
        }
    }
    let free_a: Vec<usize> = (0..a.slots.len()).filter(|&s| !seen_a[s]).collect();
    let free_b: Vec<usize> = (0..b.slots.len()).filter(|&s| !seen_b[s]).collect();
    let out_slots: Vec<IndexSlot> = free_a
        .iter()
        .map(|&s| a.slots[s])
        .chain(free_b.iter().map(|&s| b.slots[s]))
        .collect();
    let summed: Vec<usize> = pairs.iter().map(|&(sa, _)| a.slots[sa].extent).collect();

    let mut out = if out_slots.is_empty() {
        DTensor::scalar(0.0)
    } else {
        DTensor::new(out_slots.clone())?
    };
    let out_shape: Vec<usize> = out_slots.iter().map(|s| s.extent).collect();
    let mut ia = vec![0; a.slots.len()];
    let mut ib = vec![0; b.slots.len()];
    for (k, oidx) in MultiIndexIter::new(out_shape).enumerate() {
        let (oa, ob) = oidx.split_at(free_a.len());
        for (&s, &i) in free_a.iter().zip(oa) {
            ia[s] = i;
        }
        for (&s, &i) in free_b.iter().zip(ob) {
            ib[s] = i;
        }
        let mut acc = 0.0;
        for sidx in MultiIndexIter::new(summed.clone()) {
            for (&(sa, sb), &i) in pairs.iter().zip(&sidx) {
                ia[sa] = i;
                ib[sb] = i;
            }
            acc += a.data[a.offset(&ia)?] * b.data[b.offset(&ib)?];
        }
        out.data[k] = acc;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> Dims {
        Dims::new(2, 2).unwrap()
    }

    #[test]
    fn new_tensors_are_zero() {
        let d = dims();
        let t = DTensor::new(slots(d, &[SlotKind::SpatialLower, SlotKind::SpatialLower])).unwrap();
        assert_eq!(t.shape(), vec![2, 2]);
        assert!(t.data.iter().all(|&v| v == 0.0));

        let t = DTensor::new(slots(d, &[SlotKind::TemporalUpper])).unwrap();
        assert_eq!(t.data, vec![0.0, 0.0]);

        let mut t = DTensor::new(slots(d, &[SlotKind::VerticalLower])).unwrap();
        assert_eq!(t.data.len(), 4);
        t.set(&[d.vertical(1, 0)], 3.0).unwrap();
        assert_eq!(t.data[2], 3.0);
    }

    #[test]
    fn zero_extent_is_rejected() {
        let s = IndexSlot {
            kind: SlotKind::SpatialUpper,
            extent: 0,
        };
        assert!(matches!(DTensor::new(vec![s]), Err(Error::Dimension(_))));
        assert!(Dims::new(0, 1).is_err());
    }

    #[test]
    fn delta_contraction_is_identity() {
        let d = dims();
        let mut delta = DTensor::new(slots(d, &[SlotKind::SpatialUpper, SlotKind::SpatialLower])).unwrap();
        delta.set(&[0, 0], 1.0).unwrap();
        delta.set(&[1, 1], 1.0).unwrap();
        let u = DTensor::from_data(slots(d, &[SlotKind::SpatialUpper]), vec![3.0, -4.0]).unwrap();
        let r = contract(&delta, &u, &[(1, 0)]).unwrap();
        assert_eq!(r.data, vec![3.0, -4.0]);
        assert_eq!(r.slots[0].kind, SlotKind::SpatialUpper);
    }

    #[test]
    fn full_contraction_hand_sum() {
        let d = dims();
        let h = DTensor::from_data(
            slots(d, &[SlotKind::TemporalUpper, SlotKind::TemporalUpper]),
            vec![2.0, 0.0, 0.0, 3.0],
        )
        .unwrap();
        let t = DTensor::from_data(
            slots(d, &[SlotKind::TemporalLower, SlotKind::TemporalLower]),
            vec![1.0, 0.0, 0.0, 1.0],
        )
        .unwrap();
        let r = contract(&h, &t, &[(0, 0), (1, 1)]).unwrap();
        assert!(r.slots.is_empty());
        assert_eq!(r.data, vec![5.0]);
    }

    #[test]
    fn variance_mismatch_is_an_error() {
        let d = dims();
        let a = DTensor::new(slots(d, &[SlotKind::SpatialLower])).unwrap();
        let b = DTensor::new(slots(d, &[SlotKind::SpatialLower])).unwrap();
        assert!(matches!(contract(&a, &b, &[(0, 0)]), Err(Error::Contraction(_))));
    }

    #[test]
    fn coordinate_indexing_round_trips() {
        let d = Dims::new(3, 2).unwrap();
        for (k, c) in d.coords().enumerate() {
            assert_eq!(d.coord_index(c), k);
            assert_eq!(d.coord_at(k), c);
        }
        assert_eq!(d.coords().count(), d.coord_count());
    }
}
