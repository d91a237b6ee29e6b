//! JSON net-spec documents.
//!
//! Matrices travel as row-major arrays of `[re, im]` pairs. Objects are
//! stored as images of each region's basis together with their transporters;
//! loading rebuilds the values on the global algebra multiplicatively.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::ConcreteAlgebra;
use crate::error::{Error, Result};
use crate::linalg::{c, Mat};
use crate::net::NetModel;
use crate::object::{fit_values, Amplimorphism, Support};
use crate::site::CausalSite;

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_DMAX: usize = 3;

pub fn encode_matrix(m: &Mat) -> MatrixJson {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn decode_matrix(rows: &MatrixJson) -> Result<Mat> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Document("ragged matrix".into()));
    }
    Ok(Mat::from_fn(nr, nc, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetSection {
    pub ambient_dim: usize,
    /// Spanning set of each local algebra.
    pub regions: BTreeMap<String, Vec<MatrixJson>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSection {
    pub multiplicity: usize,
    pub support: Support,
    /// Per region, images of the matrices listed for it in the net section.
    pub images: BTreeMap<String, Vec<MatrixJson>>,
    pub transporters: BTreeMap<String, MatrixJson>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Options {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dmax: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetSpecDocument {
    pub site: CausalSite,
    pub net: NetSection,
    #[serde(default)]
    pub objects: BTreeMap<String, ObjectSection>,
    #[serde(default)]
    pub options: Options,
}

impl NetSpecDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("documents serialize")
    }

    /// Encode a net and some of its objects.
    pub fn from_net(net: &NetModel, objects: &[(&str, &Amplimorphism)]) -> Self {
        let regions = net
            .site
            .regions
            .iter()
            .map(|r| (r.clone(), net.local[r].basis().iter().map(encode_matrix).collect()))
            .collect();
        let mut out = Self {
            site: net.site.clone(),
            net: NetSection { ambient_dim: net.ambient_dim, regions },
            objects: BTreeMap::new(),
            options: Options::default(),
        };
        for (id, obj) in objects {
            out.objects.insert(id.to_string(), encode_object(net, obj));
        }
        out
    }

    /// Rebuild the net; `tol` overrides the document option. The site is not
    /// validated here.
    pub fn net(&self, tol: Option<f64>) -> Result<NetModel> {
        let tol = tol.or(self.options.tol).unwrap_or(DEFAULT_TOL);
        let dim = self.net.ambient_dim;
        let mut local = BTreeMap::new();
        for (r, items) in &self.net.regions {
            let mats = decode_all(items, dim, dim)?;
            local.insert(r.clone(), ConcreteAlgebra::from_span(dim, &mats, tol));
        }
        NetModel::new(self.site.clone(), dim, local, tol).map_err(|e| Error::Document(e.to_string()))
    }

    pub fn dmax(&self, dmax: Option<usize>) -> usize {
        dmax.or(self.options.dmax).unwrap_or(DEFAULT_DMAX)
    }

    pub fn object_ids(&self) -> Vec<String> {
        self.objects.keys().cloned().collect()
    }

    pub fn object(&self, net: &NetModel, id: &str) -> Result<Amplimorphism> {
        let section = self.objects.get(id).ok_or_else(|| Error::Document(format!("unknown object `{id}`")))?;
        let dim = net.ambient_dim;
        let size = dim * section.multiplicity;
        let mut seeds = Vec::new();
        for (r, images) in &section.images {
            let basis = self
                .net
                .regions
                .get(r)
                .ok_or_else(|| Error::Document(format!("object `{id}` refers to unknown region `{r}`")))?;
            if basis.len() != images.len() {
                return Err(Error::Document(format!("object `{id}`: {} images for {} basis elements of `{r}`", images.len(), basis.len())));
            }
            for (x, y) in decode_all(basis, dim, dim)?.into_iter().zip(decode_all(images, size, size)?) {
                seeds.push((x, y));
            }
        }
        let fit = fit_values(net, &seeds, size)?;
        if fit.residual >= net.tol {
            return Err(Error::Document(format!("object `{id}`: local images do not determine the object (residual {:e})", fit.residual)));
        }
        let mut transporters = BTreeMap::new();
        for (r, u) in &section.transporters {
            transporters.insert(r.clone(), decode_sized(u, size, size)?);
        }
        if let Support::Region(r) = &section.support {
            if !self.site.contains_region(r) {
                return Err(Error::Document(format!("object `{id}` is localized in unknown region `{r}`")));
            }
        }
        Amplimorphism::new(net, id, section.multiplicity, fit.values, section.support.clone(), transporters)
    }
}

fn decode_sized(m: &MatrixJson, rows: usize, cols: usize) -> Result<Mat> {
    let out = decode_matrix(m)?;
    if out.shape() != (rows, cols) {
        return Err(Error::Document(format!("matrix of shape {:?}, expected {rows}x{cols}", out.shape())));
    }
    Ok(out)
}

fn decode_all(items: &[MatrixJson], rows: usize, cols: usize) -> Result<Vec<Mat>> {
    items.iter().map(|m| decode_sized(m, rows, cols)).collect()
}

pub fn encode_object(net: &NetModel, obj: &Amplimorphism) -> ObjectSection {
    let images = net
        .site
        .regions
        .iter()
        .map(|r| (r.clone(), net.local[r].basis().iter().map(|x| encode_matrix(&obj.apply(x))).collect()))
        .collect();
    ObjectSection {
        multiplicity: obj.multiplicity,
        support: obj.claimed_support.clone(),
        images,
        transporters: obj.transporters.iter().map(|(r, u)| (r.clone(), encode_matrix(u))).collect(),
    }
}
