//! Wire format. Every websocket binary message is one envelope:
//!
//! ```text
//! [kind: u8][length: u32 little-endian][payload: length bytes]
//! ```
//!
//! Frame payloads are `[header length: u32 LE][header JSON][PNG bytes]`.
//! Input and hello payloads are JSON. Clients may also send an input event
//! as a plain websocket text message holding the same JSON.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Server to client: one rendered frame.
pub const KIND_FRAME: u8 = 1;
/// Client to server: one input event.
pub const KIND_INPUT: u8 = 2;
/// Server to client: sent once after connecting.
pub const KIND_HELLO: u8 = 3;

const ENVELOPE_HEADER: usize = 5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("message shorter than its header")]
    Truncated,
    #[error("declared length {declared} does not match payload length {actual}")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("unexpected message kind {0}")]
    UnexpectedKind(u8),
    #[error("bad json: {0}")]
    Json(String),
}

pub fn encode(kind: u8, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(ENVELOPE_HEADER + payload.len());
    out.push(kind);
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(payload);
    out
}

pub fn decode(bytes: &[u8]) -> Result<(u8, &[u8]), ProtocolError> {
    if bytes.len() < ENVELOPE_HEADER {
        return Err(ProtocolError::Truncated);
    }
    let declared = u32::from_le_bytes(bytes[1..5].try_into().unwrap()) as usize;
    let payload = &bytes[ENVELOPE_HEADER..];
    if declared != payload.len() {
        return Err(ProtocolError::LengthMismatch {
            declared,
            actual: payload.len(),
        });
    }
    Ok((bytes[0], payload))
}

/// Switches a client can flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Toggle {
    PortalBox,
    Stencil,
    Instanced,
    HiddenArea,
    FreezeLeftEye,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeFlags {
    pub portal_box: bool,
    pub stencil: bool,
    pub instanced: bool,
    pub hidden_area: bool,
    pub freeze_left_eye: bool,
}

impl Default for ModeFlags {
    fn default() -> Self {
        Self {
            portal_box: true,
            stencil: true,
            instanced: false,
            hidden_area: false,
            freeze_left_eye: false,
        }
    }
}

impl ModeFlags {
    pub fn flip(&mut self, toggle: Toggle) {
        let flag = match toggle {
            Toggle::PortalBox => &mut self.portal_box,
            Toggle::Stencil => &mut self.stencil,
            Toggle::Instanced => &mut self.instanced,
            Toggle::HiddenArea => &mut self.hidden_area,
            Toggle::FreezeLeftEye => &mut self.freeze_left_eye,
        };
        *flag = !*flag;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputAction {
    /// Held movement: `forward` and `strafe` in [-1, 1], rescaled to unit
    /// length if longer. Stays in effect until the next move event.
    Move { forward: f64, strafe: f64 },
    /// Yaw and pitch deltas in radians; positive yaw turns left, positive
    /// pitch looks up.
    Look { yaw: f64, pitch: f64 },
    Toggle { toggle: Toggle },
    Respawn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputEvent {
    #[serde(flatten)]
    pub action: InputAction,
    /// Client timestamp in milliseconds; informational.
    #[serde(default)]
    pub t: f64,
}

impl InputEvent {
    pub fn new(action: InputAction) -> Self {
        Self { action, t: 0.0 }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("events serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, ProtocolError> {
        serde_json::from_str(text).map_err(|e| ProtocolError::Json(e.to_string()))
    }

    pub fn encode(&self) -> Vec<u8> {
        encode(KIND_INPUT, self.to_json().as_bytes())
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        match decode(bytes)? {
            (KIND_INPUT, payload) => {
                let text = std::str::from_utf8(payload).map_err(|e| ProtocolError::Json(e.to_string()))?;
                Self::from_json(text)
            }
            (kind, _) => Err(ProtocolError::UnexpectedKind(kind)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSnapshot {
    pub pass_count: usize,
    pub fragments: u64,
    pub frame_ms: f64,
    pub space: u32,
    pub head_position: [f64; 3],
    pub yaw: f64,
    pub pitch: f64,
    /// Teleports applied while producing this frame.
    pub teleports: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameHeader {
    pub frame: u64,
    /// Per-eye size; the image is `2 * width` by `height`.
    pub width: usize,
    pub height: usize,
    /// SHA-256 of the PNG bytes, lowercase hex.
    pub checksum: String,
    pub metrics: MetricsSnapshot,
    pub flags: ModeFlags,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameMessage {
    pub header: FrameHeader,
    /// Side-by-side stereo image, PNG-encoded RGBA.
    pub png: Vec<u8>,
}

pub fn checksum(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl FrameMessage {
    pub fn encode(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header).expect("headers serialize");
        let mut payload = Vec::with_capacity(4 + header.len() + self.png.len());
        payload.extend_from_slice(&(header.len() as u32).to_le_bytes());
        payload.extend_from_slice(&header);
        payload.extend_from_slice(&self.png);
        encode(KIND_FRAME, &payload)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let payload = match decode(bytes)? {
            (KIND_FRAME, payload) => payload,
            (kind, _) => return Err(ProtocolError::UnexpectedKind(kind)),
        };
        if payload.len() < 4 {
            return Err(ProtocolError::Truncated);
        }
        let n = u32::from_le_bytes(payload[..4].try_into().unwrap()) as usize;
        let rest = &payload[4..];
        if rest.len() < n {
            return Err(ProtocolError::Truncated);
        }
        let header = serde_json::from_slice(&rest[..n]).map_err(|e| ProtocolError::Json(e.to_string()))?;
        Ok(Self {
            header,
            png: rest[n..].to_vec(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hello {
    /// Whether this connection's input drives the rig.
    pub authority: bool,
    pub width: usize,
    pub height: usize,
    pub rate_hz: u32,
}

impl Hello {
    pub fn encode(&self) -> Vec<u8> {
        encode(KIND_HELLO, &serde_json::to_vec(self).expect("hello serializes"))
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        match decode(bytes)? {
            (KIND_HELLO, payload) => {
                serde_json::from_slice(payload).map_err(|e| ProtocolError::Json(e.to_string()))
            }
            (kind, _) => Err(ProtocolError::UnexpectedKind(kind)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_layout_is_kind_then_le_length() {
        let bytes = encode(KIND_INPUT, b"abc");
        assert_eq!(bytes, vec![2, 3, 0, 0, 0, b'a', b'b', b'c']);
        assert_eq!(decode(&bytes).unwrap(), (2, &b"abc"[..]));
        assert_eq!(decode(&bytes[..4]), Err(ProtocolError::Truncated));
        assert!(matches!(decode(&bytes[..7]), Err(ProtocolError::LengthMismatch { .. })));
    }

    #[test]
    fn input_events_use_compact_json() {
        let event = InputEvent::new(InputAction::Move {
            forward: 1.0,
            strafe: 0.0,
        });
        assert_eq!(event.to_json(), r#"{"kind":"move","forward":1.0,"strafe":0.0,"t":0.0}"#);
        let toggle = InputEvent::from_json(r#"{"kind":"toggle","toggle":"portal_box"}"#).unwrap();
        assert_eq!(toggle.action, InputAction::Toggle { toggle: Toggle::PortalBox });
        assert_eq!(InputEvent::decode(&event.encode()).unwrap(), event);
        assert!(InputEvent::from_json(r#"{"kind":"jump"}"#).is_err());
    }

    #[test]
    fn frames_round_trip() {
        let png = vec![1, 2, 3, 4];
        let message = FrameMessage {
            header: FrameHeader {
                frame: 7,
                width: 16,
                height: 16,
                checksum: checksum(&png),
                metrics: MetricsSnapshot {
                    pass_count: 6,
                    fragments: 100,
                    frame_ms: 1.5,
                    space: 2,
                    head_position: [0.0, 1.6, 0.0],
                    yaw: 0.0,
                    pitch: 0.0,
                    teleports: 0,
                },
                flags: ModeFlags::default(),
            },
            png,
        };
        let bytes = message.encode();
        assert_eq!(bytes[0], KIND_FRAME);
        assert_eq!(FrameMessage::decode(&bytes).unwrap(), message);
        assert_eq!(
            FrameMessage::decode(&Hello { authority: true, width: 1, height: 1, rate_hz: 30 }.encode()),
            Err(ProtocolError::UnexpectedKind(KIND_HELLO))
        );
    }

    #[test]
    fn checksum_is_sha256_hex() {
        assert_eq!(
            checksum(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
