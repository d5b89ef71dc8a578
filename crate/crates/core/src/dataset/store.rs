//! HDF5 container: one gzip-compressed `(T, 2N)` f64 dataset per trajectory
//! at `/K{K}/rho{rho}/N{N}/ic{idx}`, with provenance and diagnostics stored
//! as attributes. The root carries the grid configuration text.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use hdf5::types::VarLenUnicode;
use hdf5::{Dataset, File, Group, H5Type, Location};
use ndarray::Array2;

use super::config::GridConfig;
use super::generate::GeneratedTrajectory;
use super::grid::InstanceKey;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::indicators::{OrbitClass, OrbitDiagnostics};

const DEFLATE_LEVEL: u8 = 4;
const CHUNK_ROWS: usize = 1000;
const CONFIG_ATTR: &str = "grid_config";

fn h5<T>(path: &Path, r: hdf5::Result<T>) -> Result<T> {
    r.map_err(|source| Error::Hdf5 {
        path: path.to_path_buf(),
        source,
    })
}

fn write_attr<T: H5Type>(path: &Path, loc: &Location, name: &str, value: &T) -> Result<()> {
    let attr = h5(path, loc.new_attr::<T>().create(name))?;
    h5(path, attr.write_scalar(value))
}

fn write_str_attr(path: &Path, loc: &Location, name: &str, value: &str) -> Result<()> {
    let v = VarLenUnicode::from_str(value)
        .map_err(|e| Error::Invariant(format!("attribute `{name}` not encodable: {e}")))?;
    write_attr(path, loc, name, &v)
}

fn read_attr<T: H5Type>(path: &Path, loc: &Location, name: &str) -> Result<T> {
    let attr = h5(path, loc.attr(name))?;
    h5(path, attr.read_scalar())
}

fn read_str_attr(path: &Path, loc: &Location, name: &str) -> Result<String> {
    Ok(read_attr::<VarLenUnicode>(path, loc, name)?
        .as_str()
        .to_owned())
}

pub struct DatasetWriter {
    file: File,
    path: PathBuf,
}

impl DatasetWriter {
    /// Creates (truncating) a container. Object timestamps are disabled so
    /// identical inputs produce identical files.
    pub fn create(path: &Path, config: &GridConfig) -> Result<Self> {
        let file = h5(
            path,
            File::with_options()
                .with_fcpl(|p| p.obj_track_times(false))
                .create(path),
        )?;
        write_str_attr(path, &file, CONFIG_ATTR, &config.to_text())?;
        Ok(DatasetWriter {
            file,
            path: path.to_path_buf(),
        })
    }

    fn instance_group(&self, key: &InstanceKey) -> Result<Group> {
        let mut group = h5(&self.path, self.file.group("/"))?;
        for part in key.group_path().trim_start_matches('/').split('/') {
            group = if group.link_exists(part) {
                h5(&self.path, group.group(part))?
            } else {
                h5(&self.path, group.create_group(part))?
            };
        }
        Ok(group)
    }

    pub fn write(&self, key: &InstanceKey, item: &GeneratedTrajectory) -> Result<()> {
        let path = self.path.as_path();
        let diagnostics = item.diagnostics.ok_or_else(|| {
            Error::Missing(format!(
                "diagnostics for {key} ic{}",
                item.trajectory.ic_index
            ))
        })?;
        let traj = &item.trajectory;
        let group = self.instance_group(key)?;
        let rows = traj.states.nrows();
        let ds = h5(
            path,
            group
                .new_dataset_builder()
                .chunk((rows.clamp(1, CHUNK_ROWS), traj.states.ncols()))
                .deflate(DEFLATE_LEVEL)
                .with_data(&traj.states)
                .create(format!("ic{}", traj.ic_index).as_str()),
        )?;
        write_attr(path, &ds, "K", &traj.params.k)?;
        write_attr(path, &ds, "epsilon", &traj.params.epsilon)?;
        write_attr(path, &ds, "N", &(traj.params.n as u64))?;
        write_attr(path, &ds, "rho", &key.rho)?;
        write_attr(path, &ds, "seed", &traj.seed)?;
        write_attr(path, &ds, "ic_index", &(traj.ic_index as u64))?;
        write_attr(path, &ds, "transient", &(traj.transient_discarded as u64))?;
        write_attr(path, &ds, "lambda_max", &diagnostics.lambda_max)?;
        write_attr(path, &ds, "sali_final", &diagnostics.sali_final)?;
        write_attr(path, &ds, "sali_steps", &(diagnostics.sali_steps as u64))?;
        write_str_attr(path, &ds, "orbit_class", diagnostics.orbit_class.as_str())?;
        Ok(())
    }

    pub fn flush(&self) -> Result<()> {
        h5(&self.path, self.file.flush())
    }
}

pub struct DatasetReader {
    file: File,
    path: PathBuf,
    config: GridConfig,
}

fn parse_prefixed<T: FromStr>(name: &str, prefix: &str) -> Option<T> {
    name.strip_prefix(prefix)?.parse().ok()
}

impl DatasetReader {
    pub fn open(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::Missing(format!("dataset file {}", path.display())));
        }
        let file = h5(path, File::open(path))?;
        let config: GridConfig = read_str_attr(path, &file, CONFIG_ATTR)?.parse()?;
        Ok(DatasetReader {
            file,
            path: path.to_path_buf(),
            config,
        })
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    /// All stored instances, sorted K, rho, N.
    pub fn instances(&self) -> Result<Vec<InstanceKey>> {
        let path = self.path.as_path();
        let mut keys = Vec::new();
        for kname in h5(path, self.file.member_names())? {
            let Some(k) = parse_prefixed::<f64>(&kname, "K") else {
                continue;
            };
            let kgroup = h5(path, self.file.group(&kname))?;
            for rname in h5(path, kgroup.member_names())? {
                let Some(rho) = parse_prefixed::<f64>(&rname, "rho") else {
                    continue;
                };
                let rgroup = h5(path, kgroup.group(&rname))?;
                for nname in h5(path, rgroup.member_names())? {
                    if let Some(n) = parse_prefixed::<usize>(&nname, "N") {
                        keys.push(InstanceKey::new(k, rho, n));
                    }
                }
            }
        }
        keys.sort_by(|a, b| a.cmp_key(b));
        Ok(keys)
    }

    fn group(&self, key: &InstanceKey) -> Result<Group> {
        self.file
            .group(&key.group_path())
            .map_err(|_| Error::Missing(format!("instance {key} in {}", self.path.display())))
    }

    pub fn ic_indices(&self, key: &InstanceKey) -> Result<Vec<usize>> {
        let group = self.group(key)?;
        let mut ics: Vec<usize> = h5(&self.path, group.member_names())?
            .iter()
            .filter_map(|name| parse_prefixed(name, "ic"))
            .collect();
        ics.sort_unstable();
        Ok(ics)
    }

    fn dataset(&self, key: &InstanceKey, ic_index: usize) -> Result<Dataset> {
        self.group(key)?
            .dataset(&format!("ic{ic_index}"))
            .map_err(|_| Error::Missing(format!("trajectory {key} ic{ic_index}")))
    }

    pub fn read(&self, key: &InstanceKey, ic_index: usize) -> Result<GeneratedTrajectory> {
        let path = self.path.as_path();
        let ds = self.dataset(key, ic_index)?;
        let states: Array2<f64> = h5(path, ds.read_2d())?;
        let params = crate::dynamics::SystemParams::new(
            read_attr(path, &ds, "K")?,
            read_attr(path, &ds, "epsilon")?,
            read_attr::<u64>(path, &ds, "N")? as usize,
        )?;
        let class: OrbitClass = read_str_attr(path, &ds, "orbit_class")?.parse()?;
        let trajectory = Trajectory {
            states,
            params,
            ic_index: read_attr::<u64>(path, &ds, "ic_index")? as usize,
            seed: read_attr(path, &ds, "seed")?,
            transient_discarded: read_attr::<u64>(path, &ds, "transient")? as usize,
        };
        let diagnostics = OrbitDiagnostics {
            lambda_max: read_attr(path, &ds, "lambda_max")?,
            sali_final: read_attr(path, &ds, "sali_final")?,
            sali_steps: read_attr::<u64>(path, &ds, "sali_steps")? as usize,
            orbit_class: class,
        };
        Ok(GeneratedTrajectory {
            trajectory,
            diagnostics: Some(diagnostics),
        })
    }

    /// Raw stored rows only.
    pub fn read_states(&self, key: &InstanceKey, ic_index: usize) -> Result<Array2<f64>> {
        h5(&self.path, self.dataset(key, ic_index)?.read_2d())
    }
}
