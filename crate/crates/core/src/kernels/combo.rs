use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    SpmvCsr,
    SpmvCsc,
    SptrsvCsr,
    SptrsvCsc,
    Spic0Csc,
    Spilu0Csr,
    DscalCsr,
    DscalCsc,
}

impl KernelKind {
    /// Whether iterations carry dependencies on earlier iterations.
    pub fn loop_carried(self) -> bool {
        matches!(
            self,
            KernelKind::SptrsvCsr
                | KernelKind::SptrsvCsc
                | KernelKind::Spic0Csc
                | KernelKind::Spilu0Csr
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::SpmvCsr => "SpMV CSR",
            KernelKind::SpmvCsc => "SpMV CSC",
            KernelKind::SptrsvCsr => "SpTRSV CSR",
            KernelKind::SptrsvCsc => "SpTRSV CSC",
            KernelKind::Spic0Csc => "SpIC0 CSC",
            KernelKind::Spilu0Csr => "SpILU0 CSR",
            KernelKind::DscalCsr => "DSCAL CSR",
            KernelKind::DscalCsc => "DSCAL CSC",
        }
    }
}

/// Which kernel of a pair an iteration belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KernelTag {
    First,
    Second,
}

impl KernelTag {
    pub fn index(self) -> usize {
        match self {
            KernelTag::First => 0,
            KernelTag::Second => 1,
        }
    }
}

/// One of the seven supported kernel pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ComboSpec {
    pub id: u8,
    pub first: KernelKind,
    pub second: KernelKind,
    pub alias: &'static str,
    pub operation: &'static str,
    /// The array written by the first kernel and read by the second.
    pub shared: &'static str,
}

use KernelKind::*;

pub const COMBOS: [ComboSpec; 7] = [
    ComboSpec {
        id: 1,
        first: SptrsvCsr,
        second: SptrsvCsr,
        alias: "sptrsv-sptrsv",
        operation: "x = L^-1 b, z = L^-1 x",
        shared: "x",
    },
    ComboSpec {
        id: 2,
        first: SpmvCsr,
        second: SptrsvCsr,
        alias: "spmv-sptrsv",
        operation: "y = A x, z = L^-1 y",
        shared: "y",
    },
    ComboSpec {
        id: 3,
        first: DscalCsr,
        second: Spilu0Csr,
        alias: "dscal-spilu0",
        operation: "LU ~ D A D",
        shared: "scaled A",
    },
    ComboSpec {
        id: 4,
        first: SptrsvCsr,
        second: SpmvCsc,
        alias: "sptrsv-spmv",
        operation: "y = L^-1 x, z = A y",
        shared: "y",
    },
    ComboSpec {
        id: 5,
        first: Spic0Csc,
        second: SptrsvCsc,
        alias: "spic0-sptrsv",
        operation: "L L^T ~ A, y = L^-1 x",
        shared: "L",
    },
    ComboSpec {
        id: 6,
        first: Spilu0Csr,
        second: SptrsvCsr,
        alias: "spilu0-sptrsv",
        operation: "LU ~ A, y = L^-1 x",
        shared: "LU",
    },
    ComboSpec {
        id: 7,
        first: DscalCsc,
        second: Spic0Csc,
        alias: "dscal-spic0",
        operation: "L L^T ~ D A D",
        shared: "scaled A",
    },
];

impl ComboSpec {
    pub fn by_id(id: u8) -> Option<ComboSpec> {
        COMBOS.iter().copied().find(|c| c.id == id)
    }

    pub fn kind(&self, tag: KernelTag) -> KernelKind {
        match tag {
            KernelTag::First => self.first,
            KernelTag::Second => self.second,
        }
    }
}

impl fmt::Display for ComboSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} - {})",
            self.id,
            self.first.name(),
            self.second.name()
        )
    }
}

/// Accepts a numeric id or an alias such as `spic0-sptrsv`.
impl FromStr for ComboSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let t = s.trim().to_ascii_lowercase();
        let found = match t.parse::<u8>() {
            Ok(id) => ComboSpec::by_id(id),
            Err(_) => COMBOS.iter().copied().find(|c| c.alias == t),
        };
        found.ok_or_else(|| Error::UnknownCombo(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_combo_has_a_loop_carried_kernel() {
        for c in COMBOS {
            assert!(c.first.loop_carried() || c.second.loop_carried(), "{c}");
        }
    }

    #[test]
    fn parse_ids_and_aliases() {
        assert_eq!("5".parse::<ComboSpec>().unwrap().second, SptrsvCsc);
        assert_eq!("dscal-spic0".parse::<ComboSpec>().unwrap().id, 7);
        assert!("8".parse::<ComboSpec>().is_err());
        assert!("spmv-spmv".parse::<ComboSpec>().is_err());
    }
}
