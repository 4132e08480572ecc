//! UDP ground-link messages: decimated frame samples down, operator ROI and
//! template patches up.
//!
//! Every datagram starts with `0x55 0x41` (`"UA"`), version `0x01` and a type
//! byte. Multi-byte integers are big-endian. One message per datagram.
//!
//! | type | body                                                   |
//! |------|--------------------------------------------------------|
//! | 0x01 | frame_id u32, width u16, height u16, width·height bytes |
//! | 0x02 | frame_id u32, x u16, y u16, w u16, h u16               |
//! | 0x03 | width u16, height u16, width·height bytes              |

use std::collections::VecDeque;
use std::io;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};

use thiserror::Error;

use crate::imagebuf::{GrayImage, Rect};

pub const MAGIC: [u8; 2] = [0x55, 0x41];
pub const VERSION: u8 = 0x01;
pub const MAX_DATAGRAM: usize = 65507;
pub const HEADER_LEN: usize = 4;

const TYPE_FRAME_SAMPLE: u8 = 0x01;
const TYPE_ROI_SELECT: u8 = 0x02;
const TYPE_PATCH_UPLOAD: u8 = 0x03;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("message of {0} bytes exceeds the {MAX_DATAGRAM}-byte datagram limit")]
    Oversize(usize),
    #[error("dimension {0} does not fit in 16 bits")]
    DimensionTooLarge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("unknown message type {0:#04x}")]
    UnknownType(u8),
    #[error("short payload")]
    ShortPayload,
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
    #[error("empty rect")]
    EmptyRect,
    #[error("zero image dimension")]
    ZeroDimension,
    #[error("datagram exceeds {MAX_DATAGRAM} bytes")]
    Oversize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    FrameSample { frame_id: u32, image: GrayImage },
    RoiSelect { frame_id: u32, rect: Rect },
    PatchUpload { image: GrayImage },
}

fn dim(v: usize) -> Result<[u8; 2], EncodeError> {
    u16::try_from(v)
        .map(u16::to_be_bytes)
        .map_err(|_| EncodeError::DimensionTooLarge(v))
}

fn header(kind: u8) -> Vec<u8> {
    vec![MAGIC[0], MAGIC[1], VERSION, kind]
}

fn finish(buf: Vec<u8>) -> Result<Vec<u8>, EncodeError> {
    if buf.len() > MAX_DATAGRAM {
        Err(EncodeError::Oversize(buf.len()))
    } else {
        Ok(buf)
    }
}

fn image_len_check(img: &GrayImage, fixed: usize) -> Result<(), EncodeError> {
    let total = fixed + img.data().len();
    if total > MAX_DATAGRAM {
        return Err(EncodeError::Oversize(total));
    }
    Ok(())
}

pub fn encode_frame_sample(frame_id: u32, img: &GrayImage) -> Result<Vec<u8>, EncodeError> {
    image_len_check(img, HEADER_LEN + 8)?;
    let mut buf = header(TYPE_FRAME_SAMPLE);
    buf.extend_from_slice(&frame_id.to_be_bytes());
    buf.extend_from_slice(&dim(img.width())?);
    buf.extend_from_slice(&dim(img.height())?);
    buf.extend_from_slice(img.data());
    finish(buf)
}

pub fn encode_roi_select(frame_id: u32, r: &Rect) -> Result<Vec<u8>, EncodeError> {
    let mut buf = header(TYPE_ROI_SELECT);
    buf.extend_from_slice(&frame_id.to_be_bytes());
    for v in [r.x, r.y, r.w, r.h] {
        buf.extend_from_slice(&dim(v)?);
    }
    finish(buf)
}

pub fn encode_patch_upload(img: &GrayImage) -> Result<Vec<u8>, EncodeError> {
    image_len_check(img, HEADER_LEN + 4)?;
    let mut buf = header(TYPE_PATCH_UPLOAD);
    buf.extend_from_slice(&dim(img.width())?);
    buf.extend_from_slice(&dim(img.height())?);
    buf.extend_from_slice(img.data());
    finish(buf)
}

impl Message {
    pub fn encode(&self) -> Result<Vec<u8>, EncodeError> {
        match self {
            Message::FrameSample { frame_id, image } => encode_frame_sample(*frame_id, image),
            Message::RoiSelect { frame_id, rect } => encode_roi_select(*frame_id, rect),
            Message::PatchUpload { image } => encode_patch_upload(image),
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<Message, DecodeError> {
        decode(bytes)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        let end = self.pos.checked_add(n).ok_or(DecodeError::ShortPayload)?;
        let s = self.buf.get(self.pos..end).ok_or(DecodeError::ShortPayload)?;
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<usize, DecodeError> {
        let b = self.take(2)?;
        Ok(usize::from(u16::from_be_bytes([b[0], b[1]])))
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn image(&mut self) -> Result<GrayImage, DecodeError> {
        let w = self.u16()?;
        let h = self.u16()?;
        if w == 0 || h == 0 {
            return Err(DecodeError::ZeroDimension);
        }
        let data = self.take(w * h)?.to_vec();
        Ok(GrayImage::new(w, h, data).expect("length checked above"))
    }

    fn finish(&self) -> Result<(), DecodeError> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(DecodeError::TrailingBytes(n)),
        }
    }
}

/// Decodes exactly one message; the datagram must contain nothing else.
pub fn decode(bytes: &[u8]) -> Result<Message, DecodeError> {
    if bytes.len() > MAX_DATAGRAM {
        return Err(DecodeError::Oversize);
    }
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(2).map_err(|_| DecodeError::BadMagic)? != MAGIC {
        return Err(DecodeError::BadMagic);
    }
    let version = r.take(1)?[0];
    if version != VERSION {
        return Err(DecodeError::BadVersion(version));
    }
    let kind = r.take(1)?[0];
    let msg = match kind {
        TYPE_FRAME_SAMPLE => {
            let frame_id = r.u32()?;
            Message::FrameSample {
                frame_id,
                image: r.image()?,
            }
        }
        TYPE_ROI_SELECT => {
            let frame_id = r.u32()?;
            let (x, y, w, h) = (r.u16()?, r.u16()?, r.u16()?, r.u16()?);
            if w == 0 || h == 0 {
                return Err(DecodeError::EmptyRect);
            }
            Message::RoiSelect {
                frame_id,
                rect: Rect::new(x, y, w, h),
            }
        }
        TYPE_PATCH_UPLOAD => Message::PatchUpload { image: r.image()? },
        other => return Err(DecodeError::UnknownType(other)),
    };
    r.finish()?;
    Ok(msg)
}

/// Payload-side UDP endpoint. Non-blocking receive; undecodable datagrams
/// are counted and dropped.
pub struct Link {
    socket: UdpSocket,
    ground: Option<SocketAddr>,
    rejected: u64,
}

impl Link {
    pub fn bind(addr: impl ToSocketAddrs) -> io::Result<Link> {
        let socket = UdpSocket::bind(addr)?;
        socket.set_nonblocking(true)?;
        Ok(Link {
            socket,
            ground: None,
            rejected: 0,
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.socket.local_addr()
    }

    /// Fixes the destination for frame samples. Without it, samples go to
    /// whoever sent the most recent valid datagram.
    pub fn set_ground(&mut self, addr: SocketAddr) {
        self.ground = Some(addr);
    }

    pub fn ground(&self) -> Option<SocketAddr> {
        self.ground
    }

    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    /// Sends a frame sample to the ground station, if one is known.
    pub fn send_sample(&self, frame_id: u32, img: &GrayImage) -> io::Result<bool> {
        let Some(dest) = self.ground else {
            return Ok(false);
        };
        let bytes = encode_frame_sample(frame_id, img).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
        self.socket.send_to(&bytes, dest)?;
        Ok(true)
    }

    /// Drains every pending datagram into `queue`.
    pub fn poll(&mut self, queue: &mut VecDeque<Message>) -> io::Result<()> {
        let mut buf = vec![0u8; MAX_DATAGRAM + 1];
        loop {
            match self.socket.recv_from(&mut buf) {
                Ok((n, from)) => match decode(&buf[..n]) {
                    Ok(msg) => {
                        if self.ground.is_none() {
                            self.ground = Some(from);
                        }
                        queue.push_back(msg);
                    }
                    Err(_) => self.rejected += 1,
                },
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => return Ok(()),
                Err(e) => return Err(e),
            }
        }
    }
}

/// Sends one message from an ephemeral socket (the scripted operator).
pub fn send_message(to: impl ToSocketAddrs, msg: &Message) -> io::Result<()> {
    let bytes = msg.encode().map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    let socket = UdpSocket::bind("0.0.0.0:0")?;
    socket.send_to(&bytes, to)?;
    Ok(())
}
