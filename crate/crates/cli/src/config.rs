//! `run --config` files: a subcommand and its flags as JSON.
//!
//! ```json
//! {"command": ["model", "scan"],
//!  "params": {"from": "0", "to": "0.6245", "step": "1249/1998000"},
//!  "out_dir": "results"}
//! ```
//!
//! Parameter names are flag names (underscores may replace dashes). A `true`
//! boolean becomes a bare flag, `false` omits it. `seed` defaults to
//! [`DEFAULT_SEED`](crate::cli::DEFAULT_SEED) for the commands that take one.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Result};
use serde::Deserialize;

use crate::cli::DEFAULT_SEED;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Subcommand path, e.g. `["local", "search"]`.
    pub command: Vec<String>,
    #[serde(default)]
    pub params: BTreeMap<String, Scalar>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn takes_seed(command: &[String]) -> bool {
    matches!(command.first().map(String::as_str), Some("seesaw"))
        || (command.len() == 2 && command[0] == "local" && command[1] == "search")
}

impl RunConfig {
    /// Equivalent command line, program name included.
    pub fn to_args(&self) -> Result<Vec<String>> {
        if self.command.is_empty() {
            bail!("config has an empty command");
        }
        if self.command[0] == "run" {
            bail!("configs cannot nest run");
        }
        let mut args = vec!["trinet".to_string()];
        args.extend(self.command.iter().cloned());
        for (key, value) in &self.params {
            let flag = format!("--{}", key.replace('_', "-"));
            if matches!(key.as_str(), "seed" | "out_dir" | "out-dir") {
                bail!("set {key} at the top level of the config, not in params");
            }
            match value {
                Scalar::Bool(true) => args.push(flag),
                Scalar::Bool(false) => {}
                Scalar::Int(i) => args.extend([flag, i.to_string()]),
                Scalar::Float(x) => args.extend([flag, x.to_string()]),
                Scalar::Text(s) => {
                    args.push(flag);
                    args.extend(s.split_whitespace().map(String::from));
                }
            }
        }
        match (takes_seed(&self.command), self.seed) {
            (true, seed) => args.extend(["--seed".into(), seed.unwrap_or(DEFAULT_SEED).to_string()]),
            (false, Some(_)) => bail!("{} does not take a seed", self.command.join(" ")),
            (false, None) => {}
        }
        if let Some(dir) = &self.out_dir {
            args.extend(["--out-dir".into(), dir.display().to_string()]);
        }
        Ok(args)
    }
}
