use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Micros;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceType {
    pub name: String,
    /// Total EC2 compute units.
    pub ecus: f64,
    pub cores: u32,
    pub memory_mb: u32,
    /// Listed on-demand price, USD/hour.
    pub on_demand: Micros,
}

impl InstanceType {
    pub fn new(name: &str, ecus: f64, cores: u32, memory_mb: u32, on_demand: Micros) -> Result<Self> {
        if !(ecus > 0.0) || cores == 0 || memory_mb == 0 || !on_demand.is_positive() {
            return Err(Error::Config(format!(
                "instance type `{name}` needs ecus > 0, cores >= 1, memory > 0 and a positive on-demand price"
            )));
        }
        Ok(InstanceType {
            name: name.to_string(),
            ecus,
            cores,
            memory_mb,
            on_demand,
        })
    }

    pub fn per_core_ecu(&self) -> f64 {
        self.ecus / f64::from(self.cores)
    }

    /// Standard and high-CPU types of the modeled region. ECUs follow the
    /// evaluated setup; cores, memory and on-demand prices are the public
    /// EC2 figures of the period.
    pub fn defaults() -> Vec<InstanceType> {
        let t = |name, ecus, cores, mem, od: f64| {
            InstanceType::new(name, ecus, cores, mem, Micros::from_dollars(od)).expect("valid default")
        };
        vec![
            t("m1.small", 1.0, 1, 1740, 0.085),
            t("m1.large", 5.0, 2, 7680, 0.34),
            t("m1.xlarge", 8.0, 4, 15360, 0.68),
            t("c1.medium", 5.0, 2, 1740, 0.17),
            t("c1.xlarge", 20.0, 8, 7168, 0.68),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DcId(pub usize);

/// A spot market: one instance type in one datacenter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MarketKey {
    pub dc: DcId,
    pub ty: TypeId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Datacenter {
    pub id: String,
    pub offered: Vec<TypeId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    types: Vec<InstanceType>,
    datacenters: Vec<Datacenter>,
}

impl Catalog {
    /// Every datacenter offers every type.
    pub fn new(types: Vec<InstanceType>, datacenter_ids: Vec<String>) -> Result<Self> {
        if types.is_empty() {
            return Err(Error::Config("no instance types configured".into()));
        }
        if datacenter_ids.is_empty() {
            return Err(Error::Config("no datacenters configured".into()));
        }
        for (i, t) in types.iter().enumerate() {
            if types[..i].iter().any(|o| o.name == t.name) {
                return Err(Error::Config(format!("duplicate instance type `{}`", t.name)));
            }
        }
        let offered: Vec<TypeId> = (0..types.len()).map(TypeId).collect();
        let datacenters = datacenter_ids
            .into_iter()
            .map(|id| Datacenter {
                id,
                offered: offered.clone(),
            })
            .collect();
        Ok(Catalog { types, datacenters })
    }

    /// Four datacenters offering the default type table.
    pub fn default_region() -> Self {
        let dcs = ["us-east-1a", "us-east-1b", "us-east-1c", "us-east-1d"];
        Catalog::new(
            InstanceType::defaults(),
            dcs.iter().map(|s| s.to_string()).collect(),
        )
        .expect("valid default region")
    }

    pub fn types(&self) -> &[InstanceType] {
        &self.types
    }

    pub fn datacenters(&self) -> &[Datacenter] {
        &self.datacenters
    }

    pub fn instance_type(&self, id: TypeId) -> &InstanceType {
        &self.types[id.0]
    }

    pub fn datacenter(&self, id: DcId) -> &Datacenter {
        &self.datacenters[id.0]
    }

    pub fn type_ids(&self) -> impl Iterator<Item = TypeId> + '_ {
        (0..self.types.len()).map(TypeId)
    }

    pub fn dc_ids(&self) -> impl Iterator<Item = DcId> + '_ {
        (0..self.datacenters.len()).map(DcId)
    }

    pub fn type_by_name(&self, name: &str) -> Result<TypeId> {
        self.types
            .iter()
            .position(|t| t.name.eq_ignore_ascii_case(name))
            .map(TypeId)
            .ok_or_else(|| Error::UnknownType(name.to_string()))
    }

    pub fn dc_by_name(&self, name: &str) -> Result<DcId> {
        self.datacenters
            .iter()
            .position(|d| d.id == name)
            .map(DcId)
            .ok_or_else(|| Error::UnknownDatacenter(name.to_string()))
    }

    pub fn offers(&self, market: MarketKey) -> bool {
        market.dc.0 < self.datacenters.len() && self.datacenters[market.dc.0].offered.contains(&market.ty)
    }

    /// All offered markets in (datacenter, type) order.
    pub fn markets(&self) -> impl Iterator<Item = MarketKey> + '_ {
        self.datacenters.iter().enumerate().flat_map(|(d, dc)| {
            dc.offered.iter().map(move |&ty| MarketKey { dc: DcId(d), ty })
        })
    }

    pub(crate) fn market_index(&self, market: MarketKey) -> usize {
        market.dc.0 * self.types.len() + market.ty.0
    }

    pub(crate) fn market_slots(&self) -> usize {
        self.datacenters.len() * self.types.len()
    }

    pub fn market_label(&self, market: MarketKey) -> String {
        format!(
            "{}/{}",
            self.datacenters[market.dc.0].id, self.types[market.ty.0].name
        )
    }
}
