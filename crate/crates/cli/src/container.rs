//! UFC1: a text header followed by little-endian re/im f64 pairs.
//!
//! ```text
//! UFC1
//! dim 1
//! axis 2048 0.015625 -16
//! domain time
//! members 3
//! provenance hermite k<=2
//! end
//! <payload>
//! ```

use std::path::Path;

use tfloc_core::{Axis, Complex64, Domain, GridSpec, OrthonormalSystem, SampledFunction};

use crate::output::write_atomic;
use crate::CliError;

const MAGIC: &str = "UFC1";

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub grid: GridSpec,
    pub domain: Domain,
    pub provenance: String,
    /// Members in order, each `grid.len()` samples, row-major.
    pub members: Vec<Vec<Complex64>>,
}

impl Container {
    pub fn from_functions(functions: &[SampledFunction], provenance: &str) -> Result<Self, CliError> {
        let first = functions
            .first()
            .ok_or_else(|| CliError::Input("cannot store an empty member list".into()))?;
        let grid = first.grid().clone();
        let domain = first.domain();
        if functions.iter().any(|f| f.grid() != &grid || f.domain() != domain) {
            return Err(CliError::Input("members must share one grid and domain".into()));
        }
        Ok(Container {
            grid,
            domain,
            provenance: provenance.replace(['\n', '\r'], " "),
            members: functions.iter().map(|f| f.samples().to_vec()).collect(),
        })
    }

    pub fn from_system(system: &OrthonormalSystem, provenance: &str) -> Result<Self, CliError> {
        Self::from_functions(system.members(), provenance)
    }

    pub fn functions(&self) -> Result<Vec<SampledFunction>, CliError> {
        self.members
            .iter()
            .map(|m| Ok(SampledFunction::new(self.grid.clone(), self.domain, m.clone())?))
            .collect()
    }

    pub fn system(&self) -> Result<OrthonormalSystem, CliError> {
        Ok(OrthonormalSystem::new(self.functions()?, tfloc_core::GRAM_TOLERANCE)?)
    }

    fn header(&self) -> String {
        let mut h = format!("{MAGIC}\ndim {}\n", self.grid.dim());
        for a in self.grid.axes() {
            // Display for f64 is the shortest string that parses back to the same bits.
            h += &format!("axis {} {} {}\n", a.n, a.h, a.x0);
        }
        h += &format!("domain {}\nmembers {}\nprovenance {}\nend\n", self.domain, self.members.len(), self.provenance);
        h
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = self.header();
        let mut out = Vec::with_capacity(header.len() + 16 * self.members.len() * self.grid.len());
        out.extend_from_slice(header.as_bytes());
        for m in &self.members {
            for z in m {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CliError> {
        let bad = |msg: &str| CliError::Input(format!("malformed UFC1 container: {msg}"));
        let end = find(bytes, b"\nend\n").ok_or_else(|| bad("missing header terminator"))? + 5;
        let header = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("header is not UTF-8"))?;
        let mut lines = header.lines();
        if lines.next() != Some(MAGIC) {
            return Err(bad("wrong magic"));
        }
        let (mut dim, mut axes, mut domain, mut count, mut provenance) = (None, Vec::new(), None, None, String::new());
        for line in lines {
            let (key, value) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "dim" => dim = Some(value.parse::<usize>().map_err(|_| bad("dim"))?),
                "axis" => {
                    let parts: Vec<&str> = value.split(' ').collect();
                    if parts.len() != 3 {
                        return Err(bad("axis needs N h x0"));
                    }
                    let n = parts[0].parse().map_err(|_| bad("axis N"))?;
                    let h = parts[1].parse().map_err(|_| bad("axis h"))?;
                    let x0 = parts[2].parse().map_err(|_| bad("axis x0"))?;
                    axes.push(Axis::new(n, h, x0));
                }
                "domain" => {
                    domain = Some(match value {
                        "time" => Domain::Time,
                        "frequency" => Domain::Frequency,
                        _ => return Err(bad("domain")),
                    })
                }
                "members" => count = Some(value.parse::<usize>().map_err(|_| bad("members"))?),
                "provenance" => provenance = value.to_string(),
                "end" => break,
                _ => return Err(bad(&format!("unknown key {key:?}"))),
            }
        }
        let dim = dim.ok_or_else(|| bad("missing dim"))?;
        if axes.len() != dim {
            return Err(bad("axis count does not match dim"));
        }
        let grid = GridSpec::new(axes)?;
        let domain = domain.ok_or_else(|| bad("missing domain"))?;
        let count = count.ok_or_else(|| bad("missing member count"))?;
        let payload = &bytes[end..];
        let per_member = grid.len();
        if payload.len() != 16 * count * per_member {
            return Err(bad(&format!("payload has {} bytes, expected {}", payload.len(), 16 * count * per_member)));
        }
        let value = |i: usize| f64::from_le_bytes(payload[8 * i..8 * i + 8].try_into().expect("8-byte slice"));
        let members = (0..count)
            .map(|m| {
                (0..per_member)
                    .map(|k| {
                        let i = 2 * (m * per_member + k);
                        Complex64::new(value(i), value(i + 1))
                    })
                    .collect()
            })
            .collect();
        Ok(Container { grid, domain, provenance, members })
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }

    /// SHA-256 of the serialized container, used in input digests.
    pub fn digest(&self) -> String {
        tfloc_core::report::digest_hex(&self.to_bytes())
    }
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}
