//! Offline file mode.
//!
//! ```text
//! rangecoder encode <in.sym> <in.gau> <out.rcs>
//! rangecoder decode <in.rcs> <in.gau> <out.sym>
//! ```
//!
//! All files are little-endian:
//!
//! * `.sym`: u32 count, then count i16 symbol values.
//! * `.gau`: u32 count, then count (f32 mean, f32 scale) pairs.
//! * `.rcs`: u32 count, then the coded bytes.
//!
//! The `.gau` side channel plays the role of the model: both directions
//! read it, so the coded stream itself carries only the residual entropy.

use std::fs;
use std::process::ExitCode;

use rangecoder::{decode_with_means, encode_with_means};

fn u32_le(bytes: &[u8]) -> Option<u32> {
    Some(u32::from_le_bytes(bytes.get(0..4)?.try_into().ok()?))
}

fn read_sym(path: &str) -> Result<Vec<i32>, String> {
    let raw = fs::read(path).map_err(|e| format!("{path}: {e}"))?;
    let n = u32_le(&raw).ok_or_else(|| format!("{path}: missing header"))? as usize;
    let body = &raw[4..];
    if body.len() != n * 2 {
        return Err(format!("{path}: expected {n} symbols, found {} bytes", body.len()));
    }
    Ok(body
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes([c[0], c[1]]) as i32)
        .collect())
}

fn read_gau(path: &str) -> Result<(Vec<f32>, Vec<f32>), String> {
    let raw = fs::read(path).map_err(|e| format!("{path}: {e}"))?;
    let n = u32_le(&raw).ok_or_else(|| format!("{path}: missing header"))? as usize;
    let body = &raw[4..];
    if body.len() != n * 8 {
        return Err(format!("{path}: expected {n} mean/scale pairs, found {} bytes", body.len()));
    }
    let mut mu = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    for pair in body.chunks_exact(8) {
        mu.push(f32::from_le_bytes(pair[0..4].try_into().unwrap()));
        sigma.push(f32::from_le_bytes(pair[4..8].try_into().unwrap()));
    }
    Ok((mu, sigma))
}

fn write_sym(path: &str, symbols: &[i32]) -> Result<(), String> {
    let mut out = Vec::with_capacity(4 + symbols.len() * 2);
    out.extend_from_slice(&(symbols.len() as u32).to_le_bytes());
    for &v in symbols {
        let clipped = v.clamp(i16::MIN as i32, i16::MAX as i32) as i16;
        out.extend_from_slice(&clipped.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| format!("{path}: {e}"))
}

fn run_encode(sym_path: &str, gau_path: &str, out_path: &str) -> Result<(), String> {
    let symbols = read_sym(sym_path)?;
    let (mu, sigma) = read_gau(gau_path)?;
    if mu.len() != symbols.len() {
        return Err(format!(
            "count mismatch: {} symbols vs {} model entries",
            symbols.len(),
            mu.len()
        ));
    }
    let data = encode_with_means(&symbols, &mu, &sigma)
        .map_err(|e| format!("encode failed with status {}", e.code()))?;
    let mut out = Vec::with_capacity(4 + data.len());
    out.extend_from_slice(&(symbols.len() as u32).to_le_bytes());
    out.extend_from_slice(&data);
    fs::write(out_path, out).map_err(|e| format!("{out_path}: {e}"))?;
    println!("{} symbols -> {} bytes", symbols.len(), data.len());
    Ok(())
}

fn run_decode(rcs_path: &str, gau_path: &str, out_path: &str) -> Result<(), String> {
    let raw = fs::read(rcs_path).map_err(|e| format!("{rcs_path}: {e}"))?;
    let n = u32_le(&raw).ok_or_else(|| format!("{rcs_path}: missing header"))? as usize;
    let (mu, sigma) = read_gau(gau_path)?;
    if mu.len() != n {
        return Err(format!("count mismatch: {} coded vs {} model entries", n, mu.len()));
    }
    let symbols = decode_with_means(&raw[4..], n, &mu, &sigma)
        .map_err(|e| format!("decode failed with status {}", e.code()))?;
    write_sym(out_path, &symbols)?;
    println!("{} bytes -> {} symbols", raw.len() - 4, n);
    Ok(())
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let result = match args.get(1).map(String::as_str) {
        Some("encode") if args.len() == 5 => run_encode(&args[2], &args[3], &args[4]),
        Some("decode") if args.len() == 5 => run_decode(&args[2], &args[3], &args[4]),
        _ => {
            eprintln!("usage: rangecoder encode <in.sym> <in.gau> <out.rcs>");
            eprintln!("       rangecoder decode <in.rcs> <in.gau> <out.sym>");
            return ExitCode::from(1);
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
