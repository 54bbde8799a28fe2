//! Paillier encryption: keygen, encrypt, ciphertext addition, decrypt.

use core::hash::Hasher;

use alloc::vec::Vec;
use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HeError {
    #[error("prime size {0} bits is below the 16-bit minimum")]
    ParamTooSmall(u32),
    #[error("no suitable primes found")]
    GenerationFailed,
    #[error("p and q must be distinct primes with gcd(pq, (p-1)(q-1)) = 1")]
    BadPrimes,
    #[error("plaintext must be smaller than the modulus")]
    Domain,
    #[error("ciphertexts belong to different keys")]
    KeyMismatch,
    #[error("ciphertext is not a unit modulo n^2")]
    Integrity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    pub n: BigUint,
    pub g: BigUint,
    n_sq: BigUint,
    pub key_id: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretKey {
    pub lambda: BigUint,
    pub mu: BigUint,
    n: BigUint,
    n_sq: BigUint,
    key_id: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    pub value: BigUint,
    pub key_id: u32,
}

impl Ciphertext {
    /// Big-endian magnitude.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.value.to_bytes_be()
    }

    pub fn from_bytes(bytes: &[u8], key_id: u32) -> Self {
        Ciphertext {
            value: BigUint::from_bytes_be(bytes),
            key_id,
        }
    }
}

impl PublicKey {
    pub fn n_squared(&self) -> &BigUint {
        &self.n_sq
    }
}

const SMALL_PRIMES: [u32; 24] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

/// Miller-Rabin with `rounds` random bases drawn from `rng`.
pub fn is_probable_prime<R: RngCore>(n: &BigUint, rounds: u32, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &p in SMALL_PRIMES.iter().chain(core::iter::once(&2)) {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_minus_1);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

const MR_ROUNDS: u32 = 32;
const MAX_CANDIDATES: u32 = 1_000_000;

fn random_prime<R: RngCore>(bits: u32, rng: &mut R) -> Result<BigUint, HeError> {
    for _ in 0..MAX_CANDIDATES {
        let mut c = rng.gen_biguint(u64::from(bits));
        c.set_bit(u64::from(bits) - 1, true);
        c.set_bit(u64::from(bits) - 2, true);
        c.set_bit(0, true);
        if is_probable_prime(&c, MR_ROUNDS, rng) {
            return Ok(c);
        }
    }
    Err(HeError::GenerationFailed)
}

fn key_id(n: &BigUint) -> u32 {
    let mut h = fnv::FnvHasher::default();
    h.write(&n.to_bytes_be());
    let v = h.finish();
    (v ^ (v >> 32)) as u32
}

fn l_function(x: &BigUint, n: &BigUint) -> BigUint {
    (x - 1u32) / n
}

/// Builds a key pair from the given primes with `g = n + 1`.
pub fn keypair_from_primes(p: &BigUint, q: &BigUint) -> Result<(PublicKey, SecretKey), HeError> {
    if p == q {
        return Err(HeError::BadPrimes);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    if !is_probable_prime(p, MR_ROUNDS, &mut rng) || !is_probable_prime(q, MR_ROUNDS, &mut rng) {
        return Err(HeError::BadPrimes);
    }
    let n = p * q;
    let p1 = p - 1u32;
    let q1 = q - 1u32;
    if !n.gcd(&(&p1 * &q1)).is_one() {
        return Err(HeError::BadPrimes);
    }
    let n_sq = &n * &n;
    let g = &n + 1u32;
    let lambda = p1.lcm(&q1);
    let u = l_function(&g.modpow(&lambda, &n_sq), &n);
    let mu = u.modinv(&n).ok_or(HeError::BadPrimes)?;
    let id = key_id(&n);
    Ok((
        PublicKey {
            n: n.clone(),
            g,
            n_sq: n_sq.clone(),
            key_id: id,
        },
        SecretKey {
            lambda,
            mu,
            n,
            n_sq,
            key_id: id,
        },
    ))
}

/// Seeded key generation with two distinct `prime_bits`-bit primes.
pub fn keygen(prime_bits: u32, rng_seed: u64) -> Result<(PublicKey, SecretKey), HeError> {
    if prime_bits < 16 {
        return Err(HeError::ParamTooSmall(prime_bits));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    for _ in 0..64 {
        let p = random_prime(prime_bits, &mut rng)?;
        let q = random_prime(prime_bits, &mut rng)?;
        if let Ok(kp) = keypair_from_primes(&p, &q) {
            return Ok(kp);
        }
    }
    Err(HeError::GenerationFailed)
}

/// Encrypts with an explicit nonce `r`, which must be a unit modulo `n`.
pub fn encrypt_with_nonce(pk: &PublicKey, m: &BigUint, r: &BigUint) -> Result<Ciphertext, HeError> {
    if *m >= pk.n {
        return Err(HeError::Domain);
    }
    if r.is_zero() || !r.gcd(&pk.n).is_one() {
        return Err(HeError::Integrity);
    }
    let gm = pk.g.modpow(m, &pk.n_sq);
    let rn = r.modpow(&pk.n, &pk.n_sq);
    Ok(Ciphertext {
        value: (gm * rn) % &pk.n_sq,
        key_id: pk.key_id,
    })
}

/// Encrypts with a nonce drawn from `rng`.
pub fn encrypt<R: RngCore>(
    pk: &PublicKey,
    m: &BigUint,
    rng: &mut R,
) -> Result<Ciphertext, HeError> {
    if *m >= pk.n {
        return Err(HeError::Domain);
    }
    let one = BigUint::one();
    loop {
        let r = rng.gen_biguint_range(&one, &pk.n);
        if r.gcd(&pk.n).is_one() {
            return encrypt_with_nonce(pk, m, &r);
        }
    }
}

/// Ciphertext whose plaintext is the sum of the inputs' plaintexts modulo `n`.
pub fn eval_add(pk: &PublicKey, c1: &Ciphertext, c2: &Ciphertext) -> Result<Ciphertext, HeError> {
    if c1.key_id != pk.key_id || c2.key_id != pk.key_id {
        return Err(HeError::KeyMismatch);
    }
    Ok(Ciphertext {
        value: (&c1.value * &c2.value) % &pk.n_sq,
        key_id: pk.key_id,
    })
}

pub fn decrypt(sk: &SecretKey, c: &Ciphertext) -> Result<BigUint, HeError> {
    if c.key_id != sk.key_id {
        return Err(HeError::KeyMismatch);
    }
    if c.value.is_zero() || c.value >= sk.n_sq || !c.value.gcd(&sk.n).is_one() {
        return Err(HeError::Integrity);
    }
    let u = l_function(&c.value.modpow(&sk.lambda, &sk.n_sq), &sk.n);
    Ok((u * &sk.mu) % &sk.n)
}
