//! Lattice gauge fixtures on a rectangular grid.
//!
//! Each site carries a `k`-level system with clock `Z` and shift `X`. The
//! global gauge group is generated by `⊗Z`; observables in a box are the
//! gauge-invariant operators of the box sites. With vacuum restriction the
//! net acts on the invariant subspace of the full field space.
//!
//! On a closed lattice the invariant subspace carries zero total charge, so
//! conjugation by an odd field `X_s` does not descend to it. In that sector
//! the localized automorphism at a cell is conjugation by the on-site clock,
//! which is inner; the genuinely charged `Ad(X_s)` lives on the unrestricted
//! space, where the global algebra has a two-dimensional center.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::ConcreteAlgebra;
use crate::error::{Error, Result};
use crate::linalg::{c, eye, kron, real, zeros, Mat};
use crate::net::{DualityReport, NetModel};
use crate::object::{direct_sum, tensor, Amplimorphism, Support};
use crate::site::CausalSite;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GaugeGroup {
    /// No gauge constraint; sites are qubits.
    Trivial,
    /// `Z_k` acting by the clock matrix.
    Cyclic(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeFixtureSpec {
    pub rows: usize,
    pub cols: usize,
    pub group: GaugeGroup,
    /// Represent observables on the gauge-invariant subspace.
    pub vacuum_only: bool,
    /// Tensor every local algebra with a classical bit (diagonal `2 × 2`),
    /// which puts a center into every local algebra.
    pub classical_bit: bool,
}

impl GaugeFixtureSpec {
    pub fn z2() -> Self {
        Self { rows: 2, cols: 2, group: GaugeGroup::Cyclic(2), vacuum_only: true, classical_bit: false }
    }
}

/// Sub-rectangle `[r0, r1] × [c0, c1]` of the grid (inclusive).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridBox {
    pub r0: usize,
    pub c0: usize,
    pub r1: usize,
    pub c1: usize,
}

impl GridBox {
    pub fn cell(r: usize, c: usize) -> Self {
        Self { r0: r, c0: c, r1: r, c1: c }
    }

    pub fn id(&self) -> String {
        format!("{}{}-{}{}", self.r0, self.c0, self.r1, self.c1)
    }

    pub fn sites(&self, cols: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for r in self.r0..=self.r1 {
            for c in self.c0..=self.c1 {
                out.push(r * cols + c);
            }
        }
        out
    }

    pub fn is_cell(&self) -> bool {
        self.r0 == self.r1 && self.c0 == self.c1
    }

    pub fn within(&self, other: &GridBox) -> bool {
        other.r0 <= self.r0 && self.r1 <= other.r1 && other.c0 <= self.c0 && self.c1 <= other.c1
    }

    pub fn disjoint(&self, other: &GridBox) -> bool {
        self.r1 < other.r0 || other.r1 < self.r0 || self.c1 < other.c0 || other.c1 < self.c0
    }
}

/// Which cell of a region the transporters move a charge to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Anchor {
    First,
    Last,
}

/// All boxes except the full grid, cells first, then by area and position.
pub fn grid_boxes(rows: usize, cols: usize) -> Vec<GridBox> {
    let mut out = Vec::new();
    for r0 in 0..rows {
        for r1 in r0..rows {
            for c0 in 0..cols {
                for c1 in c0..cols {
                    let b = GridBox { r0, c0, r1, c1 };
                    if !(r0 == 0 && c0 == 0 && r1 == rows - 1 && c1 == cols - 1) {
                        out.push(b);
                    }
                }
            }
        }
    }
    out.sort_by_key(|b| ((b.r1 - b.r0 + 1) * (b.c1 - b.c0 + 1), b.r0, b.c0, b.r1, b.c1));
    out
}

pub fn grid_site(rows: usize, cols: usize) -> CausalSite {
    let boxes = grid_boxes(rows, cols);
    let mut leq = Vec::new();
    let mut disjoint = Vec::new();
    for a in &boxes {
        for b in &boxes {
            if a != b && a.within(b) {
                leq.push((a.id(), b.id()));
            }
            if a.disjoint(b) {
                disjoint.push((a.id(), b.id()));
            }
        }
    }
    CausalSite::new(boxes.iter().map(GridBox::id).collect(), leq, disjoint)
}

/// Results recorded when a fixture is built; regression tests freeze them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub name: String,
    pub spec: GaugeFixtureSpec,
    pub tolerance: f64,
    pub field_dim: usize,
    pub ambient_dim: usize,
    pub global_dim: usize,
    pub site_valid: bool,
    pub complements_connected: bool,
    pub isotony_defect: f64,
    pub locality_defect: f64,
    pub irreducible: bool,
    pub duality: Vec<DualityReport>,
    pub duality_holds_everywhere: bool,
}

#[derive(Clone, Debug)]
pub struct GaugeFixture {
    pub spec: GaugeFixtureSpec,
    pub boxes: Vec<GridBox>,
    pub net: NetModel,
    level: usize,
    n_sites: usize,
    /// Columns: the retained basis states of the field space.
    embed: Mat,
}

impl GaugeFixture {
    pub fn build(spec: GaugeFixtureSpec, tol: f64) -> Result<Self> {
        if spec.rows < 2 || spec.cols < 2 {
            return Err(Error::Undefined("grid must be at least 2x2".into()));
        }
        let level = match spec.group {
            GaugeGroup::Trivial => 2,
            GaugeGroup::Cyclic(k) if k >= 2 => k,
            GaugeGroup::Cyclic(_) => return Err(Error::Undefined("cyclic order must be at least 2".into())),
        };
        let n_sites = spec.rows * spec.cols;
        let field_dim = level.pow(n_sites as u32);
        if field_dim * if spec.classical_bit { 2 } else { 1 } > 64 {
            return Err(Error::Undefined(format!("field space of dimension {field_dim} is too large")));
        }
        let kept: Vec<usize> = (0..field_dim)
            .filter(|&idx| !spec.vacuum_only || charge_of(idx, level, n_sites, spec.group) == 0)
            .collect();
        let mut embed = zeros(field_dim, kept.len());
        for (col, &idx) in kept.iter().enumerate() {
            embed[(idx, col)] = real(1.0);
        }
        let boxes = grid_boxes(spec.rows, spec.cols);
        let site = grid_site(spec.rows, spec.cols);
        let layout = Layout { level, n_sites, group: spec.group, embed: &embed, classical_bit: spec.classical_bit };
        let dim = layout.ambient_dim();
        let bits = [diag_unit(0), diag_unit(1)];
        let mut local = BTreeMap::new();
        for b in &boxes {
            let mut ops = Vec::new();
            for f in layout.invariant_monomials(&b.sites(spec.cols)) {
                let restricted = embed.adjoint() * f * &embed;
                if spec.classical_bit {
                    ops.extend(bits.iter().map(|e| kron(&restricted, e)));
                } else {
                    ops.push(restricted);
                }
            }
            local.insert(b.id(), ConcreteAlgebra::from_span(dim, &ops, tol));
        }
        let net = NetModel::new(site, dim, local, tol)?;
        Ok(Self { spec, boxes, net, level, n_sites, embed })
    }

    fn layout(&self) -> Layout<'_> {
        Layout {
            level: self.level,
            n_sites: self.n_sites,
            group: self.spec.group,
            embed: &self.embed,
            classical_bit: self.spec.classical_bit,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.layout().ambient_dim()
    }

    pub fn field_dim(&self) -> usize {
        self.embed.nrows()
    }

    pub fn clock(&self) -> Mat {
        clock(self.level)
    }

    pub fn shift(&self) -> Mat {
        shift(self.level)
    }

    /// Field operator `op` acting at `site`.
    pub fn field_op(&self, site: usize, op: &Mat) -> Mat {
        self.layout().on_site(site, op)
    }

    /// Compress a field operator to the reference space (and tensor the
    /// classical bit with the identity, if present).
    pub fn observable(&self, field: &Mat) -> Mat {
        let restricted = self.embed.adjoint() * field * &self.embed;
        if self.spec.classical_bit {
            kron(&restricted, &eye(2))
        } else {
            restricted
        }
    }

    /// Unitary implementing the localized automorphism at cell `cell`.
    ///
    /// Vacuum-restricted cyclic groups use the on-site clock; unrestricted
    /// cyclic groups use the shift (the charged field). The trivial group has
    /// no charge and returns the identity.
    pub fn charge_unitary(&self, cell: &GridBox, charge: usize) -> Result<Mat> {
        if !cell.is_cell() || cell.r1 >= self.spec.rows || cell.c1 >= self.spec.cols {
            return Err(Error::UnknownRegion(cell.id()));
        }
        let site = cell.r0 * self.spec.cols + cell.c0;
        let field = match self.spec.group {
            GaugeGroup::Trivial => {
                if charge != 0 {
                    return Err(Error::Undefined("the trivial group has only the zero charge".into()));
                }
                return Ok(eye(self.ambient_dim()));
            }
            GaugeGroup::Cyclic(k) => {
                if charge >= k {
                    return Err(Error::Undefined(format!("charge {charge} is not in Z_{k}")));
                }
                let op = if self.spec.vacuum_only { self.clock() } else { self.shift() };
                self.layout().on_site(site, &matpow(&op, charge))
            }
        };
        if self.spec.vacuum_only {
            Ok(self.observable(&field))
        } else if self.spec.classical_bit {
            Ok(kron(&field, &eye(2)))
        } else {
            Ok(field)
        }
    }

    /// First cell of a box, used as the landing point of transporters.
    fn anchor(&self, region: &str, anchor: Anchor) -> Result<GridBox> {
        let b = self.boxes.iter().find(|b| b.id() == region).ok_or_else(|| Error::UnknownRegion(region.into()))?;
        Ok(match anchor {
            Anchor::First => GridBox::cell(b.r0, b.c0),
            Anchor::Last => GridBox::cell(b.r1, b.c1),
        })
    }

    /// Charged automorphism at `cell` with transporters `u_c u_s*` to every
    /// region, `c` the first cell of the region.
    pub fn charged_morphism(&self, cell: &GridBox, charge: usize) -> Result<Amplimorphism> {
        self.charged_morphism_anchored(cell, charge, Anchor::First)
    }

    /// As [`Self::charged_morphism`], with the transporter into each region
    /// moving the charge to the chosen corner cell of that region.
    pub fn charged_morphism_anchored(&self, cell: &GridBox, charge: usize, anchor: Anchor) -> Result<Amplimorphism> {
        let u = self.charge_unitary(cell, charge)?;
        let label = format!("q{}@{}", charge, cell.id());
        let mut obj = Amplimorphism::inner(&self.net, label, &u, Support::Region(cell.id()))?;
        let mut transporters = BTreeMap::new();
        for r in &self.net.site.regions {
            let uc = self.charge_unitary(&self.anchor(r, anchor)?, charge)?;
            transporters.insert(r.clone(), &uc * u.adjoint());
        }
        obj.transporters = transporters;
        Ok(obj)
    }

    /// Compression onto one value of the classical bit: a non-faithful object
    /// localized everywhere. Only defined with the classical bit.
    pub fn classical_compression(&self) -> Result<Amplimorphism> {
        if !self.spec.classical_bit {
            return Err(Error::Undefined("fixture has no classical bit".into()));
        }
        let p = kron(&eye(self.embed.ncols()), &diag_unit(0));
        let mut obj = Amplimorphism::from_fn(&self.net, "bit0", 1, Support::Everywhere, |a| a * &p)?;
        for r in &self.net.site.regions {
            obj.transporters.insert(r.clone(), p.clone());
        }
        Ok(obj)
    }

    /// Objects shipped with the fixture, keyed by id: the unit, the charge at
    /// the first and last cell, their sum and square, and the classical
    /// compression when the fixture has one.
    pub fn standard_objects(&self) -> Result<Vec<(String, Amplimorphism)>> {
        let net = &self.net;
        let mut out = vec![("iota".to_string(), Amplimorphism::identity(net).with_label("iota"))];
        let charge = match self.spec.group {
            GaugeGroup::Trivial => 0,
            GaugeGroup::Cyclic(_) => 1,
        };
        let last = GridBox::cell(self.spec.rows - 1, self.spec.cols - 1);
        let rho = self.charged_morphism(&GridBox::cell(0, 0), charge)?.with_label("rho");
        let moved = self.charged_morphism(&last, charge)?.with_label(format!("rho{}{}", last.r0, last.c0));
        let (sum, _) = direct_sum(net, &[&rho, &rho])?;
        let square = tensor(net, &rho, &rho)?;
        out.push((moved.label.clone(), moved));
        out.push(("rho+rho".into(), sum.with_label("rho+rho")));
        out.push(("rho*rho".into(), square.with_label("rho*rho")));
        out.insert(1, ("rho".into(), rho));
        if self.spec.classical_bit {
            out.push(("bit0".into(), self.classical_compression()?.with_label("bit0")));
        }
        Ok(out)
    }

    pub fn manifest(&self, name: &str) -> FixtureManifest {
        let report = self.net.check();
        let complements_connected =
            self.net.site.regions.iter().all(|r| self.net.site.complement_connected(r).unwrap_or(false));
        FixtureManifest {
            name: name.to_string(),
            spec: self.spec.clone(),
            tolerance: self.net.tol,
            field_dim: self.field_dim(),
            ambient_dim: self.ambient_dim(),
            global_dim: report.global_dim,
            site_valid: report.site.valid,
            complements_connected,
            isotony_defect: report.isotony.iter().map(|d| d.defect).fold(0.0, f64::max),
            locality_defect: report.locality.iter().map(|d| d.defect).fold(0.0, f64::max),
            irreducible: report.irreducible,
            duality_holds_everywhere: report.duality.iter().all(|d| d.holds),
            duality: report.duality,
        }
    }
}

struct Layout<'a> {
    level: usize,
    n_sites: usize,
    group: GaugeGroup,
    embed: &'a Mat,
    classical_bit: bool,
}

impl Layout<'_> {
    fn ambient_dim(&self) -> usize {
        self.embed.ncols() * if self.classical_bit { 2 } else { 1 }
    }

    /// Site 0 is the outermost tensor factor.
    fn on_site(&self, site: usize, op: &Mat) -> Mat {
        let before = eye(self.level.pow(site as u32));
        let after = eye(self.level.pow((self.n_sites - site - 1) as u32));
        kron(&kron(&before, op), &after)
    }

    /// Monomials `Π X^a Z^b` on `sites` whose total shift is gauge invariant.
    fn invariant_monomials(&self, sites: &[usize]) -> Vec<Mat> {
        let k = self.level;
        let (x, z) = (shift(k), clock(k));
        let field_dim = self.embed.nrows();
        let mut out = Vec::new();
        let total = (k * k).pow(sites.len() as u32);
        for code in 0..total {
            let mut rest = code;
            let mut op = eye(field_dim);
            let mut charge = 0;
            for &s in sites {
                let (a, b) = ((rest % (k * k)) / k, rest % k);
                rest /= k * k;
                charge += a;
                op *= self.on_site(s, &(matpow(&x, a) * matpow(&z, b)));
            }
            if matches!(self.group, GaugeGroup::Trivial) || charge % k == 0 {
                out.push(op);
            }
        }
        out
    }
}

fn clock(k: usize) -> Mat {
    let mut z = zeros(k, k);
    for j in 0..k {
        let angle = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
        z[(j, j)] = c(angle.cos(), angle.sin());
    }
    if k == 2 {
        // exact -1 instead of cos(pi)
        z[(1, 1)] = real(-1.0);
    }
    z
}

fn shift(k: usize) -> Mat {
    let mut x = zeros(k, k);
    for j in 0..k {
        x[((j + 1) % k, j)] = real(1.0);
    }
    x
}

fn matpow(m: &Mat, n: usize) -> Mat {
    (0..n).fold(eye(m.nrows()), |acc, _| acc * m)
}

fn diag_unit(i: usize) -> Mat {
    crate::linalg::matrix_unit(2, i, i)
}

fn charge_of(idx: usize, level: usize, n_sites: usize, group: GaugeGroup) -> usize {
    match group {
        GaugeGroup::Trivial => 0,
        GaugeGroup::Cyclic(k) => {
            let mut rest = idx;
            let mut total = 0;
            for _ in 0..n_sites {
                total += rest % level;
                rest /= level;
            }
            total % k
        }
    }
}

/// Names accepted by [`named`].
pub const NAMES: [&str; 4] = ["z2", "z2-unrestricted", "z2-center", "trivial"];

pub fn named_spec(name: &str) -> Result<GaugeFixtureSpec> {
    let base = GaugeFixtureSpec::z2();
    match name {
        "z2" => Ok(base),
        "z2-unrestricted" => Ok(GaugeFixtureSpec { vacuum_only: false, ..base }),
        "z2-center" => Ok(GaugeFixtureSpec { classical_bit: true, ..base }),
        "trivial" => Ok(GaugeFixtureSpec { group: GaugeGroup::Trivial, vacuum_only: false, ..base }),
        other => Err(Error::Undefined(format!("unknown fixture `{other}`; known: {}", NAMES.join(", ")))),
    }
}

pub fn named(name: &str, tol: f64) -> Result<GaugeFixture> {
    GaugeFixture::build(named_spec(name)?, tol)
}
