//! Instance generation, the mixed distribution and the error oracle.

use std::sync::Arc;

use rand::Rng;

use super::level::{next_level, LevelLaw};
use super::payload::{ClearPayload, EncPayload, Payload, Widths};
use crate::crypto::fhe::{fhe_decrypt, fhe_encrypt, fhe_keygen, fhe_setup, Ciphertext, FhePublic, MasterSecret};
use crate::crypto::sig::{sig_keygen, sig_sign_zero, sig_verify, SigKeypair, SigPublicKey, SignatureToken};
use crate::crypto::snark::{snark_prove_prefix, snark_verify, SigCountStatement, SnarkParams};
use crate::error::GameError;
use crate::game::Task;
use crate::seed::{rng_for, TrialRng};

/// Smallest accepted security parameter: 16-byte nonces and identities.
pub const MIN_N: u32 = 128;

/// Inert time bound carried as the proof system's setup tag.
pub const SNARK_SETUP_TAG: &[u8] = b"T=bin(2^n)";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataConfig {
    pub n: u32,
    pub cap: u64,
    pub width: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            n: MIN_N,
            cap: LevelLaw::DEFAULT_CAP,
            width: super::payload::DEFAULT_WIDTH,
        }
    }
}

impl DataConfig {
    pub fn validate(&self) -> Result<(), GameError> {
        if self.n < MIN_N {
            return Err(GameError::InvalidParams(format!(
                "n must be at least {MIN_N} so that tokens carry 16 bytes, got {}",
                self.n
            )));
        }
        LevelLaw::new(self.cap)?;
        if self.width < 165 {
            return Err(GameError::InvalidParams(format!(
                "payload width {} cannot hold a clear payload (165 bytes)",
                self.width
            )));
        }
        Ok(())
    }
}

/// Which half of the mixture a draw comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    Clear,
    Enc,
}

/// Everything party code may see.
#[derive(Debug, Clone)]
pub struct DataPublic {
    pub n: u32,
    pub pk: SigPublicKey,
    pub fhe: FhePublic,
    pub snark: SnarkParams,
    pub law: LevelLaw,
    pub widths: Widths,
}

impl DataPublic {
    /// Signature and proof checks on a clear payload, as a party can run
    /// them: the token verifies and the proof verifies for its own level.
    pub fn clear_valid(&self, p: &ClearPayload) -> bool {
        sig_verify(&self.pk, &p.token)
            && snark_verify(&self.snark, &SigCountStatement::new(p.level, &self.pk), &p.proof)
    }

    /// Rebuild the public view from published parameters. Homomorphic
    /// evaluation needs the master secret, so this view only judges clear
    /// inputs.
    pub fn restore(
        config: DataConfig,
        pk: &[u8; 32],
        fhe_params: [u8; 32],
        snark: SnarkParams,
    ) -> Result<Self, GameError> {
        config.validate()?;
        let pk = SigPublicKey::from_bytes(pk)
            .ok_or_else(|| GameError::InvalidParams("malformed verification key".into()))?;
        Ok(Self {
            n: config.n,
            pk,
            fhe: FhePublic::with_secret(fhe_params, &MasterSecret([0; 32])),
            snark,
            law: LevelLaw { cap: config.cap },
            widths: Widths::new(config.width),
        })
    }

    /// Error of a decoded pair; a missing `y` stands for a malformed one.
    pub fn judge(&self, x: &ClearPayload, y: Option<&ClearPayload>) -> bool {
        let Some(y) = y else {
            return true;
        };
        let required = next_level(x.level).expect("decoded levels are positive");
        let valid = x.token == y.token && y.level >= required && self.clear_valid(x) && self.clear_valid(y);
        !valid
    }

    /// The error oracle for pairs a party can judge without secrets.
    /// Encrypted inputs are a capability error.
    pub fn h_eval_clear(&self, x: &[u8], y: &[u8]) -> Result<bool, GameError> {
        match self.widths.decode(x) {
            None => Ok(false),
            Some(Payload::Clear(x)) => Ok(self.judge(&x, ClearPayload::decode(y, self.widths.clear).as_ref())),
            Some(Payload::Enc(_)) => Err(GameError::Capability("the master secret to judge an encrypted input")),
        }
    }
}

pub struct DataInstance {
    public: DataPublic,
    keypair: SigKeypair,
    msk: MasterSecret,
}

impl std::fmt::Debug for DataInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DataInstance")
            .field("public", &self.public)
            .finish_non_exhaustive()
    }
}

impl DataInstance {
    pub fn generate(config: DataConfig, seed: u64) -> Result<Self, GameError> {
        config.validate()?;
        let mut rng = rng_for(seed, "data-instance");
        let keypair = sig_keygen(&mut rng);
        let (fhe, msk) = fhe_setup(&mut rng);
        Ok(Self::assemble(
            config,
            keypair,
            fhe,
            msk,
            SnarkParams::setup(SNARK_SETUP_TAG.to_vec()),
        ))
    }

    /// Rebuild from stored parts.
    pub fn from_parts(
        config: DataConfig,
        signing_secret: &[u8; 32],
        fhe_params: [u8; 32],
        msk: MasterSecret,
        snark: SnarkParams,
    ) -> Result<Self, GameError> {
        config.validate()?;
        let keypair = SigKeypair::from_secret(signing_secret);
        let fhe = FhePublic::with_secret(fhe_params, &msk);
        Ok(Self::assemble(config, keypair, fhe, msk, snark))
    }

    fn assemble(
        config: DataConfig,
        keypair: SigKeypair,
        fhe: FhePublic,
        msk: MasterSecret,
        snark: SnarkParams,
    ) -> Self {
        Self {
            public: DataPublic {
                n: config.n,
                pk: keypair.public().clone(),
                fhe,
                snark,
                law: LevelLaw { cap: config.cap },
                widths: Widths::new(config.width),
            },
            keypair,
            msk,
        }
    }

    pub fn config(&self) -> DataConfig {
        DataConfig {
            n: self.public.n,
            cap: self.public.law.cap,
            width: self.public.widths.clear,
        }
    }

    pub fn signing_secret(&self) -> [u8; 32] {
        self.keypair.secret_bytes()
    }

    /// White-box access to the master secret.
    pub fn master_secret(&self) -> &MasterSecret {
        &self.msk
    }

    pub fn sign(&self, rng: &mut TrialRng) -> SignatureToken {
        sig_sign_zero(&self.keypair, rng)
    }

    /// A clear pair with `x` at level `k`: fresh token `a`, proofs from
    /// `k + ⌊√k⌋` fresh signatures (the first `k` witness `x`'s proof).
    pub fn sample_clear_at(&self, k: u64, rng: &mut TrialRng) -> Result<(ClearPayload, ClearPayload), GameError> {
        let k2 = next_level(k)?;
        let pk = &self.public.pk;
        let a = self.sign(rng);
        let witness: Arc<[SignatureToken]> = (0..k2).map(|_| self.sign(rng)).collect();
        let prove = |level, rng: &mut TrialRng| {
            snark_prove_prefix(
                &self.public.snark,
                pk,
                &SigCountStatement::new(level, pk),
                &witness,
                rng,
            )
            .expect("honest witnesses always prove")
        };
        let x = ClearPayload {
            token: a,
            level: k,
            proof: prove(k, rng),
        };
        let y = ClearPayload {
            token: a,
            level: k2,
            proof: prove(k2, rng),
        };
        Ok((x, y))
    }

    pub fn sample_clear(&self, rng: &mut TrialRng) -> (ClearPayload, ClearPayload) {
        let k = self.public.law.sample(rng);
        self.sample_clear_at(k, rng).expect("sampled levels are positive")
    }

    /// Encrypt a clear pair under a fresh `id₁`, bundling a key for a fresh
    /// `id₂`.
    pub fn encrypt_pair(&self, x: &ClearPayload, y: &ClearPayload, rng: &mut TrialRng) -> (Vec<u8>, Vec<u8>) {
        let w = self.public.widths;
        let id1 = rng.gen();
        let id2 = rng.gen();
        let x_enc = EncPayload {
            body: fhe_encrypt(&self.public.fhe, &id1, &x.encode(w.clear), rng),
            id1,
            id2,
            key2: fhe_keygen(&self.msk, &id2),
        };
        let y_enc = fhe_encrypt(&self.public.fhe, &id1, &y.encode(w.clear), rng);
        (w.encode(&Payload::Enc(x_enc)), y_enc.encode())
    }

    /// One draw with the coin and the level optionally forced.
    pub fn sample_with(&self, form: Option<Form>, level: Option<u64>, rng: &mut TrialRng) -> (Vec<u8>, Vec<u8>) {
        let form = form.unwrap_or_else(|| if rng.gen::<bool>() { Form::Enc } else { Form::Clear });
        let (x, y) = match level {
            Some(k) => self.sample_clear_at(k, rng).expect("forced level must be positive"),
            None => self.sample_clear(rng),
        };
        match form {
            Form::Clear => {
                let w = self.public.widths.clear;
                (x.encode(w), y.encode(w))
            }
            Form::Enc => self.encrypt_pair(&x, &y, rng),
        }
    }

    /// The error oracle: `false` means `y` is a valid answer for `x`.
    pub fn h_eval(&self, x: &[u8], y: &[u8]) -> bool {
        let w = self.public.widths;
        let (x, y) = match w.decode(x) {
            None => return false,
            Some(Payload::Clear(x)) => (x, ClearPayload::decode(y, w.clear)),
            Some(Payload::Enc(enc)) => {
                let key = fhe_keygen(&self.msk, &enc.id1);
                let Some(x) = fhe_decrypt(&key, &enc.body)
                    .ok()
                    .and_then(|m| ClearPayload::decode(&m, w.clear))
                else {
                    return false;
                };
                let y = Ciphertext::decode(y)
                    .and_then(|c| fhe_decrypt(&key, &c).ok())
                    .and_then(|m| ClearPayload::decode(&m, w.clear));
                (x, y)
            }
        };
        self.public.judge(&x, y.as_ref())
    }

    /// White-box decryption of an encrypted input's body.
    pub fn open(&self, x: &[u8]) -> Option<ClearPayload> {
        let w = self.public.widths;
        match w.decode(x)? {
            Payload::Clear(c) => Some(c),
            Payload::Enc(enc) => fhe_decrypt(&fhe_keygen(&self.msk, &enc.id1), &enc.body)
                .ok()
                .and_then(|m| ClearPayload::decode(&m, w.clear)),
        }
    }

    /// White-box reading of an answer `y` to `x`, decrypted under `x`'s
    /// identity when `x` is encrypted.
    pub fn open_response(&self, x: &[u8], y: &[u8]) -> Option<ClearPayload> {
        let w = self.public.widths;
        match w.decode(x)? {
            Payload::Clear(_) => ClearPayload::decode(y, w.clear),
            Payload::Enc(enc) => Ciphertext::decode(y)
                .and_then(|c| fhe_decrypt(&fhe_keygen(&self.msk, &enc.id1), &c).ok())
                .and_then(|m| ClearPayload::decode(&m, w.clear)),
        }
    }

    /// Hardness level of `x`. Encrypted inputs need `white_box`.
    pub fn level_of(&self, x: &[u8], white_box: bool) -> Result<Option<u64>, GameError> {
        match self.public.widths.decode(x) {
            None => Ok(None),
            Some(Payload::Clear(c)) => Ok(Some(c.level)),
            Some(Payload::Enc(_)) if !white_box => Err(GameError::Capability("white-box access to decrypt the input")),
            Some(Payload::Enc(_)) => Ok(self.open(x).map(|c| c.level)),
        }
    }
}

impl Task for DataInstance {
    type Public = DataPublic;

    fn public(&self) -> &DataPublic {
        &self.public
    }

    fn sample(&self, rng: &mut TrialRng) -> (Vec<u8>, Vec<u8>) {
        self.sample_with(None, None, rng)
    }

    fn error(&self, x: &[u8], y: &[u8]) -> bool {
        self.h_eval(x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::payload::BOTTOM;

    fn instance() -> DataInstance {
        DataInstance::generate(DataConfig::default(), 7).unwrap()
    }

    #[test]
    fn n_below_minimum_is_rejected() {
        let cfg = DataConfig {
            n: 64,
            ..DataConfig::default()
        };
        assert!(matches!(
            DataInstance::generate(cfg, 0),
            Err(GameError::InvalidParams(_))
        ));
    }

    #[test]
    fn forced_level_two_answers_at_three() {
        let inst = instance();
        let mut rng = rng_for(1, "t");
        let (x, y) = inst.sample_clear_at(2, &mut rng).unwrap();
        assert_eq!((x.level, y.level), (2, 3));
    }

    #[test]
    fn honest_pairs_score_zero_in_both_forms() {
        let inst = instance();
        let mut rng = rng_for(2, "t");
        for form in [Form::Clear, Form::Enc] {
            for _ in 0..50 {
                let (x, y) = inst.sample_with(Some(form), None, &mut rng);
                assert!(!inst.h_eval(&x, &y));
            }
        }
    }

    #[test]
    fn echo_answer_fails_level_check() {
        let inst = instance();
        let mut rng = rng_for(3, "t");
        let (x, _) = inst.sample_with(Some(Form::Clear), Some(3), &mut rng);
        assert!(inst.h_eval(&x, &x));
    }

    #[test]
    fn format_rules() {
        let inst = instance();
        let mut rng = rng_for(4, "t");
        assert!(!inst.h_eval(b"garbage", b"garbage"));
        let (x, _) = inst.sample_with(Some(Form::Clear), None, &mut rng);
        assert!(inst.h_eval(&x, BOTTOM));
        let (x, _) = inst.sample_with(Some(Form::Enc), None, &mut rng);
        assert!(inst.h_eval(&x, BOTTOM));
    }

    #[test]
    fn levels_white_box() {
        let inst = instance();
        let mut rng = rng_for(5, "t");
        let (x, y) = inst.sample_clear_at(5, &mut rng).unwrap();
        let w = inst.public().widths.clear;
        assert_eq!(inst.level_of(&x.encode(w), false), Ok(Some(5)));
        let (xe, _) = inst.encrypt_pair(&x, &y, &mut rng);
        assert!(matches!(inst.level_of(&xe, false), Err(GameError::Capability(_))));
        assert_eq!(inst.level_of(&xe, true), Ok(Some(5)));
        assert_eq!(inst.level_of(b"junk", true), Ok(None));
    }
}
