//! Flat `section.key = value` config files merged with command-line values.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde_json::Value;

pub const ENV_CONFIG: &str = "POSE_ACT_CONFIG";

/// Keys a config file may set.
pub const KNOWN_KEYS: &[&str] = &[
    "camera.fx",
    "camera.fy",
    "camera.cx",
    "camera.cy",
    "camera.width",
    "camera.height",
    "paths.mesh",
    "paths.backgrounds",
    "loop.max_steps",
    "loop.patch_side",
    "datagen.per_group",
    "datagen.occluder_pool",
    "datagen.procedural_backgrounds",
    "train.steps",
    "train.batch_size",
    "train.lr",
    "train.replay_capacity",
    "train.replay_refresh",
    "robustness.delta",
    "robustness.m_max",
    "robustness.cap",
    "robustness.scenes",
    "detect.grid_spacing",
    "detect.probe_depth",
    "detect.rotations",
    "detect.rotation_cap",
];

pub fn parse(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected `section.key = value`", n + 1);
        };
        let (k, v) = (k.trim(), v.trim());
        if !KNOWN_KEYS.contains(&k) {
            bail!("config line {}: unknown key `{k}`", n + 1);
        }
        out.insert(k.to_string(), v.trim_matches('"').to_string());
    }
    Ok(out)
}

/// Values from the config file, with every resolved setting recorded.
#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    pub resolved: BTreeMap<String, Value>,
}

impl Settings {
    /// Reads `path`, or the file named by `POSE_ACT_CONFIG`, or nothing.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let env = std::env::var_os(ENV_CONFIG).filter(|v| !v.is_empty());
        let path = path.map(Path::to_path_buf).or(env.map(Into::into));
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(&p).with_context(|| format!("reading config {}", p.display()))?;
                parse(&text).with_context(|| format!("in config {}", p.display()))?
            }
            None => BTreeMap::new(),
        };
        Ok(Self {
            file,
            resolved: BTreeMap::new(),
        })
    }

    /// Flag value, else config file value, else `default`.
    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + serde::Serialize,
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(s) => s.parse().map_err(|e| anyhow::anyhow!("config key `{key}`: {e}"))?,
                None => default,
            },
        };
        self.record(key, &v);
        Ok(v)
    }

    /// Like [`Settings::get`] without a default.
    pub fn get_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + serde::Serialize,
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(s) => Some(s.parse().map_err(|e| anyhow::anyhow!("config key `{key}`: {e}"))?),
                None => None,
            },
        };
        self.record(key, &v);
        Ok(v)
    }

    pub fn record(&mut self, key: &str, v: &impl serde::Serialize) {
        self.resolved
            .insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }
}
