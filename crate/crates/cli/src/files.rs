//! Instance files. `public.json` holds everything a party may know,
//! including the proof-registry entries needed to verify saved payloads;
//! `secret.json` holds the signing key, the master secret and proof
//! witnesses. `gen-instance` also writes one sampled pair per form.

use std::path::{Path, PathBuf};

use defense_games::classification::{ToyClassificationInstance, ToyConfig};
use defense_games::crypto::fhe::MasterSecret;
use defense_games::crypto::sig::SignatureToken;
use defense_games::crypto::snark::SnarkParams;
use defense_games::data::instance::SNARK_SETUP_TAG;
use defense_games::data::{DataConfig, DataInstance, DataPublic, Form};
use defense_games::seed::rng_for;
use defense_games::time::{TimeConfig, TimeInstance, TimePublic};
use defense_games::Task;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::TaskKind;
use crate::error::{CliError, Result};

pub const PUBLIC_FILE: &str = "public.json";
pub const SECRET_FILE: &str = "secret.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofEntry {
    pub statement: String,
    pub token: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessEntry {
    pub statement: String,
    pub token: String,
    pub witness: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvcEntry {
    pub t: u64,
    pub state: String,
    pub commitment: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum PublicFile {
    ToyClassification {
        support: usize,
    },
    Ldata {
        n: u32,
        cap: u64,
        width: usize,
        verification_key: String,
        fhe_params: String,
        proofs: Vec<ProofEntry>,
    },
    Ltime {
        n: u32,
        horizon: u64,
        cap: u64,
        width: usize,
        eta: f64,
        z: Vec<String>,
        chain_key: String,
        fhe_params: String,
        ivc: Vec<IvcEntry>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum SecretFile {
    ToyClassification {
        seed: u64,
    },
    Ldata {
        signing_secret: String,
        master_secret: String,
        witnesses: Vec<WitnessEntry>,
    },
    Ltime {
        master_secret: String,
    },
}

/// What `gen-instance` needs to know.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenRequest {
    pub task: TaskKind,
    pub n: u32,
    pub seed: u64,
    pub cap: u64,
    pub width: usize,
    pub horizon: u64,
    pub eta: f64,
    pub support: usize,
}

fn unhex<const N: usize>(field: &str, s: &str) -> Result<[u8; N]> {
    hex::decode(s)
        .ok()
        .and_then(|v| <[u8; N]>::try_from(v).ok())
        .ok_or_else(|| CliError::Config(format!("field {field}: expected {N} hex-encoded bytes")))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(CliError::io(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Write the instance files and sampled pairs into `out`. Returns the
/// paths written.
pub fn gen_instance(req: &GenRequest, out: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let mut rng = rng_for(req.seed, "gen-instance-pairs");
    let mut pairs: Vec<(&str, Vec<u8>, Vec<u8>)> = Vec::new();
    let (public, secret) = match req.task {
        TaskKind::ToyClassification => {
            let inst = toy(req.support, req.seed)?;
            let (x, y) = inst.sample(&mut rng);
            pairs.push(("clear", x, y));
            (
                PublicFile::ToyClassification { support: req.support },
                SecretFile::ToyClassification { seed: req.seed },
            )
        }
        TaskKind::Ldata => {
            let config = DataConfig {
                n: req.n,
                cap: req.cap,
                width: req.width,
            };
            let inst = DataInstance::generate(config, req.seed)?;
            for form in [Form::Clear, Form::Enc] {
                let (x, y) = inst.sample_with(Some(form), None, &mut rng);
                pairs.push((form_name(form), x, y));
            }
            let entries = inst.public().snark.snapshot();
            let public = PublicFile::Ldata {
                n: config.n,
                cap: config.cap,
                width: config.width,
                verification_key: hex::encode(inst.public().pk.to_bytes()),
                fhe_params: hex::encode(inst.public().fhe.params),
                proofs: entries
                    .iter()
                    .map(|(d, t, _)| ProofEntry {
                        statement: hex::encode(d),
                        token: hex::encode(t),
                    })
                    .collect(),
            };
            let secret = SecretFile::Ldata {
                signing_secret: hex::encode(inst.signing_secret()),
                master_secret: hex::encode(inst.master_secret().0),
                witnesses: entries
                    .iter()
                    .map(|(d, t, w)| WitnessEntry {
                        statement: hex::encode(d),
                        token: hex::encode(t),
                        witness: w.iter().map(|s| hex::encode(s.encode())).collect(),
                    })
                    .collect(),
            };
            (public, secret)
        }
        TaskKind::Ltime => {
            let config = TimeConfig {
                n: req.n,
                horizon: req.horizon,
                cap: req.cap,
                width: req.width,
                eta: req.eta,
                ..TimeConfig::default()
            };
            let inst = TimeInstance::generate(config, req.seed)?;
            for form in [Form::Clear, Form::Enc] {
                let (x, y) = inst.sample_with(Some(form), None, &mut rng);
                pairs.push((form_name(form), x, y));
            }
            let p = inst.public();
            let public = PublicFile::Ltime {
                n: config.n,
                horizon: config.horizon,
                cap: config.cap,
                width: config.width,
                eta: config.eta,
                z: p.z.iter().map(hex::encode).collect(),
                chain_key: hex::encode(inst.chain_key()),
                fhe_params: hex::encode(p.fhe.params),
                ivc: p
                    .ivc
                    .snapshot()
                    .into_iter()
                    .map(|(t, state, commitment)| IvcEntry {
                        t,
                        state: hex::encode(state),
                        commitment: hex::encode(commitment),
                    })
                    .collect(),
            };
            let secret = SecretFile::Ltime {
                master_secret: hex::encode(inst.master_secret().0),
            };
            (public, secret)
        }
    };
    let mut written = vec![out.join(PUBLIC_FILE), out.join(SECRET_FILE)];
    write_json(&written[0], &public)?;
    write_json(&written[1], &secret)?;
    for (name, x, y) in pairs {
        for (suffix, bytes) in [("x", &x), ("y", &y)] {
            let path = out.join(format!("{name}.{suffix}"));
            write_file(&path, bytes)?;
            written.push(path);
        }
    }
    Ok(written)
}

fn form_name(form: Form) -> &'static str {
    match form {
        Form::Clear => "clear",
        Form::Enc => "enc",
    }
}

fn toy(support: usize, seed: u64) -> Result<ToyClassificationInstance> {
    Ok(ToyClassificationInstance::generate(
        &ToyConfig { support, weights: None },
        seed,
    )?)
}

/// A loaded instance. Without the secret file only the public views are
/// available.
#[allow(clippy::large_enum_variant)]
pub enum Loaded {
    Toy(ToyClassificationInstance),
    Data(DataInstance),
    DataPublic(DataPublic),
    Time(TimeInstance),
    TimePublic(TimePublic),
}

pub fn load_instance(dir: &Path, with_secret: bool) -> Result<Loaded> {
    let public: PublicFile = read_json(&dir.join(PUBLIC_FILE))?;
    let secret_path = dir.join(SECRET_FILE);
    let secret: Option<SecretFile> = if with_secret {
        if !secret_path.exists() {
            return Err(CliError::Capability(format!(
                "capability required: white-box access needs {}",
                secret_path.display()
            )));
        }
        Some(read_json(&secret_path)?)
    } else {
        None
    };
    let mismatch = || CliError::Config("public and secret files describe different tasks".into());
    match public {
        PublicFile::ToyClassification { support } => match secret {
            Some(SecretFile::ToyClassification { seed }) => Ok(Loaded::Toy(toy(support, seed)?)),
            Some(_) => Err(mismatch()),
            None => Err(CliError::Capability(
                "capability required: toy labels are secret; pass --white-box with the secret file".into(),
            )),
        },
        PublicFile::Ldata {
            n,
            cap,
            width,
            verification_key,
            fhe_params,
            proofs,
        } => {
            let config = DataConfig { n, cap, width };
            let fhe_params = unhex::<32>("fhe_params", &fhe_params)?;
            let snark = SnarkParams::setup(SNARK_SETUP_TAG.to_vec());
            match secret {
                Some(SecretFile::Ldata {
                    signing_secret,
                    master_secret,
                    witnesses,
                }) => {
                    let mut entries = Vec::with_capacity(witnesses.len());
                    for w in witnesses {
                        let tokens = w
                            .witness
                            .iter()
                            .map(|s| {
                                hex::decode(s)
                                    .ok()
                                    .and_then(|b| SignatureToken::decode(&b))
                                    .ok_or_else(|| CliError::Config("malformed witness token".into()))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        entries.push((unhex("statement", &w.statement)?, unhex("token", &w.token)?, tokens));
                    }
                    snark.restore(entries);
                    let inst = DataInstance::from_parts(
                        config,
                        &unhex("signing_secret", &signing_secret)?,
                        fhe_params,
                        MasterSecret(unhex("master_secret", &master_secret)?),
                        snark,
                    )?;
                    if inst.public().pk.to_bytes() != unhex::<32>("verification_key", &verification_key)? {
                        return Err(CliError::Config(
                            "secret file does not match the verification key".into(),
                        ));
                    }
                    Ok(Loaded::Data(inst))
                }
                Some(_) => Err(mismatch()),
                None => {
                    let entries = proofs
                        .iter()
                        .map(|p| Ok((unhex("statement", &p.statement)?, unhex("token", &p.token)?, Vec::new())))
                        .collect::<Result<Vec<_>>>()?;
                    snark.restore(entries);
                    let pk = unhex("verification_key", &verification_key)?;
                    Ok(Loaded::DataPublic(DataPublic::restore(config, &pk, fhe_params, snark)?))
                }
            }
        }
        PublicFile::Ltime {
            n,
            horizon,
            cap,
            width,
            eta,
            z,
            chain_key,
            fhe_params,
            ivc,
        } => {
            let config = TimeConfig {
                n,
                horizon,
                cap,
                width,
                eta,
                z_len: z.len(),
            };
            let z = z.iter().map(|s| unhex::<16>("z", s)).collect::<Result<Vec<_>>>()?;
            let chain_key = unhex("chain_key", &chain_key)?;
            let fhe_params = unhex("fhe_params", &fhe_params)?;
            let entries = ivc
                .iter()
                .map(|e| Ok((e.t, unhex("state", &e.state)?, unhex("commitment", &e.commitment)?)))
                .collect::<Result<Vec<_>>>()?;
            match secret {
                Some(SecretFile::Ltime { master_secret }) => {
                    config.validate()?;
                    let msk = MasterSecret(unhex("master_secret", &master_secret)?);
                    let inst = TimeInstance::from_parts(config, z, fhe_params, msk, chain_key);
                    inst.public().ivc.restore(entries);
                    Ok(Loaded::Time(inst))
                }
                Some(_) => Err(mismatch()),
                None => Ok(Loaded::TimePublic(TimePublic::restore(
                    config, z, fhe_params, chain_key, entries,
                )?)),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    /// `1` when `y` is not a valid answer for `x`.
    pub h: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_level: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_level: Option<u64>,
}

/// Judge a pair. White-box mode reads the secret file and also reports the
/// decoded levels; without it, encrypted inputs and toy labels are a
/// capability error.
pub fn verify_pair(dir: &Path, x: &[u8], y: &[u8], white_box: bool) -> Result<Verdict> {
    let loaded = load_instance(dir, white_box)?;
    let (h, x_level, y_level) = match loaded {
        Loaded::Toy(inst) => (inst.error(x, y), None, None),
        Loaded::Data(inst) => (
            inst.h_eval(x, y),
            inst.open(x).map(|p| p.level),
            inst.open_response(x, y).map(|p| p.level),
        ),
        Loaded::DataPublic(public) => (public.h_eval_clear(x, y)?, None, None),
        Loaded::Time(inst) => (
            inst.time_h_eval(x, y),
            inst.open(x).map(|p| p.t),
            inst.open_response(x, y).map(|p| p.t),
        ),
        Loaded::TimePublic(public) => (public.h_eval_clear(x, y)?, None, None),
    };
    let (x_level, y_level) = if white_box { (x_level, y_level) } else { (None, None) };
    Ok(Verdict {
        h: h as u8,
        x_level,
        y_level,
    })
}
