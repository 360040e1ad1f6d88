//! Versioned campaign checkpoints.
//!
//! Layout: an 8-byte magic, a little-endian u32 format version, a
//! little-endian u64 payload length, the SHA-256 digest of the payload, then
//! the JSON-encoded campaign state. The digest and length are verified
//! before any state is constructed, so a corrupted file never yields a
//! partially restored campaign.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::campaign::CampaignState;
use crate::error::Error;

const MAGIC: &[u8; 8] = b"SWRMFZCK";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8 + 32;

pub(crate) fn save(state: &CampaignState, path: &Path) -> Result<(), Error> {
    let payload = serde_json::to_vec(state)?;
    let digest = Sha256::digest(&payload);
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&digest);
    out.extend_from_slice(&payload);
    // Write to a sibling temp file and rename, so readers never observe a
    // half-written checkpoint.
    let tmp = path.with_extension("bin.tmp");
    std::fs::write(&tmp, &out)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub(crate) fn load(path: &Path) -> Result<CampaignState, Error> {
    let data = std::fs::read(path)?;
    if data.len() < HEADER_LEN {
        return Err(Error::Checkpoint(format!(
            "file too short: {} bytes",
            data.len()
        )));
    }
    if &data[..8] != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = u32::from_le_bytes(data[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "version {version} not supported (expected {VERSION})"
        )));
    }
    let len = u64::from_le_bytes(data[12..20].try_into().unwrap()) as usize;
    let payload = &data[HEADER_LEN..];
    if payload.len() != len {
        return Err(Error::Checkpoint(format!(
            "payload length {} does not match header {len}",
            payload.len()
        )));
    }
    let digest = Sha256::digest(payload);
    if digest.as_slice() != &data[20..52] {
        return Err(Error::Checkpoint("payload digest mismatch".into()));
    }
    let state: CampaignState =
        serde_json::from_slice(payload).map_err(|e| Error::Checkpoint(format!("bad payload: {e}")))?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::{Campaign, CampaignConfig, Variant};

    fn tmp(name: &str) -> std::path::PathBuf {
        std::env::temp_dir().join(format!("swarmfuzz-ckpt-{name}-{}", std::process::id()))
    }

    fn config(seed: u64) -> CampaignConfig {
        CampaignConfig {
            variant: Variant::Psofuzz,
            max_tests: Some(400),
            rng_seed: seed,
            out_dir: tmp("out"),
            ..CampaignConfig::default()
        }
    }

    #[test]
    fn fresh_state_round_trips_to_iteration_zero() {
        let path = tmp("fresh");
        let mut campaign = Campaign::new(config(1)).unwrap();
        campaign.write_checkpoint(&path).unwrap();
        let restored = Campaign::from_checkpoint(&path).unwrap();
        assert_eq!(restored.iterations(), 0);
        assert_eq!(restored.state(), campaign.state());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn resume_matches_the_uninterrupted_run() {
        let path = tmp("mid");
        let mut straight = Campaign::new(config(2)).unwrap();
        while straight.step().unwrap() {}

        let mut half = Campaign::new(config(2)).unwrap();
        for _ in 0..20 {
            assert!(half.step().unwrap());
        }
        half.write_checkpoint(&path).unwrap();
        drop(half);

        let mut resumed = Campaign::from_checkpoint(&path).unwrap();
        while resumed.step().unwrap() {}
        assert_eq!(resumed.result(), straight.result());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn corruption_is_rejected() {
        let path = tmp("corrupt");
        let mut campaign = Campaign::new(config(3)).unwrap();
        campaign.step().unwrap();
        campaign.write_checkpoint(&path).unwrap();

        let mut bytes = std::fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0x01;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            Campaign::from_checkpoint(&path),
            Err(Error::Checkpoint(_))
        ));

        std::fs::write(&path, b"garbage").unwrap();
        assert!(matches!(
            Campaign::from_checkpoint(&path),
            Err(Error::Checkpoint(_))
        ));
        std::fs::remove_file(&path).ok();
    }
}
