//! Campaign file: what to run and against which stack.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpga::{Architecture, FpgaConfig};
use crate::inject::{InjectionKind, ScheduleSpec};
use crate::vpu::{FtMode, Kernel, VpuConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VpuCampaign {
    pub kernel: Kernel,
    pub mode: FtMode,
    /// Number of distinct workers hit; one burst each.
    pub impaired: usize,
    pub kind: InjectionKind,
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Input image file; a seeded random image otherwise.
    pub image: Option<String>,
    pub node: VpuConfig,
}

impl Default for VpuCampaign {
    fn default() -> Self {
        Self {
            kernel: Kernel::Conv2d,
            mode: FtMode::None,
            impaired: 3,
            kind: InjectionKind::VpuInstr,
            width: 256,
            height: 256,
            maxval: 255,
            image: None,
            node: VpuConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Fpga,
    Vpu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignSpec {
    pub target: Target,
    pub seed: u64,
    pub arch: String,
    pub schedule: ScheduleSpec,
    pub fpga: FpgaConfig,
    pub vpu: VpuCampaign,
}

impl Default for CampaignSpec {
    fn default() -> Self {
        Self {
            target: Target::Fpga,
            seed: 0,
            arch: "cms+dpr+tmr+wd".into(),
            schedule: ScheduleSpec::default(),
            fpga: FpgaConfig::default(),
            vpu: VpuCampaign::default(),
        }
    }
}

impl CampaignSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: CampaignSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn architecture(&self) -> Result<Architecture> {
        self.arch.parse()
    }

    pub fn validate(&self) -> Result<()> {
        match self.target {
            Target::Fpga => {
                self.architecture()?;
                self.fpga.validate()?;
                if self.schedule.events.is_empty() && self.schedule.period_us == 0 {
                    return Err(Error::Config("injection period must be > 0".into()));
                }
            }
            Target::Vpu => {
                if self.vpu.impaired > crate::vpu::WORKERS {
                    return Err(Error::Config(format!("cannot impair {} of 12 workers", self.vpu.impaired)));
                }
                if !self.vpu.kind.is_vpu() {
                    return Err(Error::Config(format!("{} is not a VPU injection", self.vpu.kind)));
                }
            }
        }
        Ok(())
    }
}
