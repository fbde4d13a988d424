use rand::Rng;

use super::payload::{decode_input, encode_input, TimeInput, TimePayload};
use crate::budget::{Party, StepMeter};
use crate::crypto::fhe::{fhe_decrypt, fhe_encrypt, fhe_keygen, fhe_setup, Ciphertext, FhePublic, MasterSecret};
use crate::crypto::ivc::{ivc_start, ivc_update, ivc_verify, IvcClaim, IvcError, IvcKeys, IvcProof};
use crate::crypto::npl::npl_start;
use crate::crypto::{random_bytes, sha256, Digest};
use crate::data::instance::{Form, MIN_N};
use crate::data::level::{next_level, LevelLaw};
use crate::data::payload::{EncPayload, Widths, DEFAULT_WIDTH};
use crate::error::GameError;
use crate::game::Task;
use crate::seed::{rng_for, TrialRng};

/// `t + ⌊√t⌋`; the same jump rule as the data task.
pub fn time_next_level(t: u64) -> Result<u64, GameError> {
    next_level(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConfig {
    pub n: u32,
    pub horizon: u64,
    pub cap: u64,
    pub width: usize,
    /// Gap exponent of the sequential language; reported, never enforced.
    pub eta: f64,
    /// Number of seeds in `Z`.
    pub z_len: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            n: MIN_N,
            horizon: 256,
            cap: LevelLaw::DEFAULT_CAP,
            width: DEFAULT_WIDTH,
            eta: 0.5,
            z_len: 4,
        }
    }
}

impl TimeConfig {
    pub fn validate(&self) -> Result<(), GameError> {
        if self.n < MIN_N {
            return Err(GameError::InvalidParams(format!(
                "n must be at least {MIN_N}, got {}",
                self.n
            )));
        }
        if self.horizon < 16 {
            return Err(GameError::InvalidParams(format!(
                "horizon T must be at least 16, got {}",
                self.horizon
            )));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(GameError::InvalidParams(format!(
                "eta must lie in (0, 1), got {}",
                self.eta
            )));
        }
        if self.z_len == 0 {
            return Err(GameError::InvalidParams("Z needs at least one seed".into()));
        }
        if self.width < 101 {
            return Err(GameError::InvalidParams(format!(
                "width {} cannot hold a time payload",
                self.width
            )));
        }
        LevelLaw::new(self.cap).map(|_| ())
    }
}

/// Everything party code may see. The IVC keys double as the public
/// proving and verification keys.
#[derive(Debug, Clone)]
pub struct TimePublic {
    pub n: u32,
    pub horizon: u64,
    pub eta: f64,
    pub z: Vec<[u8; 16]>,
    pub start: Digest,
    pub ivc: IvcKeys,
    pub fhe: FhePublic,
    pub law: LevelLaw,
    pub widths: Widths,
}

impl TimePublic {
    pub fn claim_for(&self, p: &TimePayload) -> IvcClaim {
        IvcClaim {
            z_digest: self.ivc.z_digest,
            t: p.t,
            state: p.state,
        }
    }

    pub fn payload_valid(&self, p: &TimePayload) -> bool {
        ivc_verify(&self.ivc, &self.claim_for(p), &p.proof)
    }

    /// Rebuild the public view from published parameters, including the
    /// proof registry entries. Like its data-task counterpart it only
    /// judges clear inputs.
    pub fn restore(
        config: TimeConfig,
        z: Vec<[u8; 16]>,
        fhe_params: [u8; 32],
        chain_key: [u8; 32],
        registry: impl IntoIterator<Item = (u64, Digest, Digest)>,
    ) -> Result<Self, GameError> {
        config.validate()?;
        let zd = z_digest(&z);
        let ivc = IvcKeys::new(zd, chain_key);
        ivc.restore(registry);
        Ok(Self {
            n: config.n,
            horizon: config.horizon,
            eta: config.eta,
            start: npl_start(&zd),
            z,
            ivc,
            fhe: FhePublic::with_secret(fhe_params, &MasterSecret([0; 32])),
            law: LevelLaw { cap: config.cap },
            widths: Widths::new(config.width),
        })
    }

    pub fn judge(&self, x: &TimePayload, y: Option<&TimePayload>) -> bool {
        let Some(y) = y else {
            return true;
        };
        let required = time_next_level(x.t).expect("decoded levels are positive");
        let valid = y.t >= required && self.payload_valid(x) && self.payload_valid(y);
        !valid
    }

    pub fn h_eval_clear(&self, x: &[u8], y: &[u8]) -> Result<bool, GameError> {
        match decode_input(self.widths, x) {
            None => Ok(false),
            Some(TimeInput::Clear(x)) => Ok(self.judge(&x, TimePayload::decode(y, self.widths.clear).as_ref())),
            Some(TimeInput::Enc(_)) => Err(GameError::Capability("the master secret to judge an encrypted input")),
        }
    }

    /// The verified zero-step payload frontier, `(c₀, π₀)`.
    pub fn origin(&self) -> (Digest, IvcProof) {
        (self.start, ivc_start(&self.ivc, self.start))
    }

    /// Extend a verified `(t, c, π)` by `steps`, charging `meter` one unit
    /// per step.
    pub fn extend_checked(&self, from: &TimePayload, steps: u64, meter: &StepMeter) -> Result<TimePayload, IvcError> {
        let (mut state, mut proof) = (from.state, from.proof);
        for _ in 0..steps {
            (state, proof) = ivc_update(&self.ivc, &state, &proof, meter)?;
        }
        Ok(TimePayload {
            t: proof.t,
            state,
            proof,
        })
    }

    pub fn extend(&self, from: &TimePayload, steps: u64, meter: &StepMeter) -> Option<TimePayload> {
        self.extend_checked(from, steps, meter).ok()
    }
}

pub fn z_digest(z: &[[u8; 16]]) -> Digest {
    let parts: Vec<&[u8]> = z.iter().map(|s| s.as_slice()).collect();
    let mut all = vec![b"npl-z".as_slice()];
    all.extend(parts);
    sha256(&all)
}

pub struct TimeInstance {
    public: TimePublic,
    msk: MasterSecret,
    /// Honest chain `(c_t, π_t)` for every level the sampler can need.
    chain: Vec<TimePayload>,
    nature_steps: u64,
}

impl std::fmt::Debug for TimeInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TimeInstance")
            .field("public", &self.public)
            .finish_non_exhaustive()
    }
}

impl TimeInstance {
    pub fn generate(config: TimeConfig, seed: u64) -> Result<Self, GameError> {
        config.validate()?;
        let mut rng = rng_for(seed, "time-instance");
        let (fhe, msk) = fhe_setup(&mut rng);
        let z: Vec<[u8; 16]> = (0..config.z_len).map(|_| random_bytes(&mut rng)).collect();
        let chain_key = random_bytes(&mut rng);
        Ok(Self::from_parts(config, z, fhe.params, msk, chain_key))
    }

    pub fn from_parts(
        config: TimeConfig,
        z: Vec<[u8; 16]>,
        fhe_params: [u8; 32],
        msk: MasterSecret,
        chain_key: [u8; 32],
    ) -> Self {
        let zd = z_digest(&z);
        let public = TimePublic {
            n: config.n,
            horizon: config.horizon,
            eta: config.eta,
            start: npl_start(&zd),
            z,
            ivc: IvcKeys::new(zd, chain_key),
            fhe: FhePublic::with_secret(fhe_params, &msk),
            law: LevelLaw { cap: config.cap },
            widths: Widths::new(config.width),
        };
        // The sampler's own sequential work, done once.
        let meter = StepMeter::unbounded(Party::Nature);
        let (start, proof) = public.origin();
        let mut chain = vec![TimePayload {
            t: 0,
            state: start,
            proof,
        }];
        let top = next_level(config.cap).expect("cap is positive");
        for _ in 0..top {
            let last = chain.last().expect("chain starts non-empty");
            chain.push(public.extend(last, 1, &meter).expect("honest chain extends"));
        }
        Self {
            public,
            msk,
            chain,
            nature_steps: meter.used(),
        }
    }

    pub fn config(&self) -> TimeConfig {
        TimeConfig {
            n: self.public.n,
            horizon: self.public.horizon,
            cap: self.public.law.cap,
            width: self.public.widths.clear,
            eta: self.public.eta,
            z_len: self.public.z.len(),
        }
    }

    pub fn master_secret(&self) -> &MasterSecret {
        &self.msk
    }

    pub fn chain_key(&self) -> [u8; 32] {
        self.public.ivc.chain_key()
    }

    /// Honest payload at level `t`, if within the precomputed chain.
    pub fn honest_at(&self, t: u64) -> Option<TimePayload> {
        self.chain.get(usize::try_from(t).ok()?).copied()
    }

    pub fn sample_clear_at(&self, t: u64) -> Result<(TimePayload, TimePayload), GameError> {
        let t2 = time_next_level(t)?;
        match (self.honest_at(t), self.honest_at(t2)) {
            (Some(x), Some(y)) => Ok((x, y)),
            _ => Err(GameError::InvalidParams(format!("level {t} exceeds the level cap"))),
        }
    }

    pub fn encrypt_pair(&self, x: &TimePayload, y: &TimePayload, rng: &mut TrialRng) -> (Vec<u8>, Vec<u8>) {
        let w = self.public.widths;
        let id1 = rng.gen();
        let id2 = rng.gen();
        let enc = EncPayload {
            body: fhe_encrypt(&self.public.fhe, &id1, &x.encode(w.clear), rng),
            id1,
            id2,
            key2: fhe_keygen(&self.msk, &id2),
        };
        let y_enc = fhe_encrypt(&self.public.fhe, &id1, &y.encode(w.clear), rng);
        (encode_input(w, &TimeInput::Enc(enc)), y_enc.encode())
    }

    pub fn sample_with(&self, form: Option<Form>, level: Option<u64>, rng: &mut TrialRng) -> (Vec<u8>, Vec<u8>) {
        let form = form.unwrap_or_else(|| if rng.gen::<bool>() { Form::Enc } else { Form::Clear });
        let t = level.unwrap_or_else(|| self.public.law.sample(rng));
        let (x, y) = self.sample_clear_at(t).expect("level within the precomputed chain");
        match form {
            Form::Clear => {
                let w = self.public.widths.clear;
                (x.encode(w), y.encode(w))
            }
            Form::Enc => self.encrypt_pair(&x, &y, rng),
        }
    }

    pub fn open(&self, x: &[u8]) -> Option<TimePayload> {
        let w = self.public.widths;
        match decode_input(w, x)? {
            TimeInput::Clear(p) => Some(p),
            TimeInput::Enc(e) => fhe_decrypt(&fhe_keygen(&self.msk, &e.id1), &e.body)
                .ok()
                .and_then(|m| TimePayload::decode(&m, w.clear)),
        }
    }

    /// White-box reading of an answer `y` to input `x`: decrypted under
    /// `x`'s identity when `x` is encrypted.
    pub fn open_response(&self, x: &[u8], y: &[u8]) -> Option<TimePayload> {
        let w = self.public.widths;
        match decode_input(w, x)? {
            TimeInput::Clear(_) => TimePayload::decode(y, w.clear),
            TimeInput::Enc(e) => Ciphertext::decode(y)
                .and_then(|c| fhe_decrypt(&fhe_keygen(&self.msk, &e.id1), &c).ok())
                .and_then(|m| TimePayload::decode(&m, w.clear)),
        }
    }

    pub fn level_of(&self, x: &[u8], white_box: bool) -> Result<Option<u64>, GameError> {
        match decode_input(self.public.widths, x) {
            None => Ok(None),
            Some(TimeInput::Clear(p)) => Ok(Some(p.t)),
            Some(TimeInput::Enc(_)) if !white_box => {
                Err(GameError::Capability("white-box access to decrypt the input"))
            }
            Some(TimeInput::Enc(_)) => Ok(self.open(x).map(|p| p.t)),
        }
    }

    /// Error oracle with the same format rules as the data task and IVC
    /// verification in place of signature and proof checks.
    pub fn time_h_eval(&self, x: &[u8], y: &[u8]) -> bool {
        let w = self.public.widths;
        let (x, y) = match decode_input(w, x) {
            None => return false,
            Some(TimeInput::Clear(x)) => (x, TimePayload::decode(y, w.clear)),
            Some(TimeInput::Enc(e)) => {
                let key = fhe_keygen(&self.msk, &e.id1);
                let Some(x) = fhe_decrypt(&key, &e.body)
                    .ok()
                    .and_then(|m| TimePayload::decode(&m, w.clear))
                else {
                    return false;
                };
                let y = Ciphertext::decode(y)
                    .and_then(|c| fhe_decrypt(&key, &c).ok())
                    .and_then(|m| TimePayload::decode(&m, w.clear));
                (x, y)
            }
        };
        self.public.judge(&x, y.as_ref())
    }
}

impl Task for TimeInstance {
    type Public = TimePublic;

    fn public(&self) -> &TimePublic {
        &self.public
    }

    fn sample(&self, rng: &mut TrialRng) -> (Vec<u8>, Vec<u8>) {
        self.sample_with(None, None, rng)
    }

    fn error(&self, x: &[u8], y: &[u8]) -> bool {
        self.time_h_eval(x, y)
    }

    fn nature_steps(&self) -> u64 {
        self.nature_steps
    }
}
