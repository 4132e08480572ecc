//! Payload side of the ground link: a closed loop that sends decimated
//! frame samples down and takes ROI or patch selections up.

use std::collections::VecDeque;
use std::io;

use thiserror::Error;

use crate::groundlink::{Link, Message};
use crate::imagebuf::GrayImage;
use crate::sim::{ClosedLoop, FrameResult, SimError};

/// Frames kept for resolving ROI selections against earlier samples.
pub const DEFAULT_RING: usize = 64;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("link: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// What became of one uplink message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Applied {
    Template { width: usize, height: usize },
    Ignored(String),
}

pub struct Payload {
    lp: ClosedLoop,
    link: Link,
    sample_every: usize,
    ring: VecDeque<(u32, GrayImage)>,
    ring_len: usize,
    inbox: VecDeque<Message>,
    log: Vec<Applied>,
}

impl Payload {
    pub fn new(lp: ClosedLoop, link: Link, sample_every: usize) -> Payload {
        Payload {
            lp,
            link,
            sample_every: sample_every.max(1),
            ring: VecDeque::new(),
            ring_len: DEFAULT_RING,
            inbox: VecDeque::new(),
            log: Vec::new(),
        }
    }

    pub fn with_ring(mut self, frames: usize) -> Payload {
        self.ring_len = frames.max(1);
        self
    }

    pub fn link(&self) -> &Link {
        &self.link
    }

    pub fn link_mut(&mut self) -> &mut Link {
        &mut self.link
    }

    pub fn closed_loop(&self) -> &ClosedLoop {
        &self.lp
    }

    /// Every uplink message handled so far, in arrival order.
    pub fn applied(&self) -> &[Applied] {
        &self.log
    }

    fn select(&mut self, patch: &GrayImage) -> Applied {
        match self.lp.set_template(patch) {
            Ok(()) => Applied::Template {
                width: patch.width(),
                height: patch.height(),
            },
            Err(e) => Applied::Ignored(e.to_string()),
        }
    }

    fn apply(&mut self, msg: Message) -> Option<Applied> {
        match msg {
            Message::FrameSample { .. } => None,
            Message::PatchUpload { image } => Some(self.select(&image)),
            Message::RoiSelect { frame_id, rect } => {
                let Some((_, frame)) = self.ring.iter().find(|(id, _)| *id == frame_id) else {
                    return Some(Applied::Ignored(format!("frame {frame_id} no longer buffered")));
                };
                let full = rect.scaled(self.sample_every);
                match frame.crop(&full) {
                    Ok(patch) => Some(self.select(&patch)),
                    Err(e) => Some(Applied::Ignored(e.to_string())),
                }
            }
        }
    }

    /// Handles pending uplink messages, then runs one frame and sends its
    /// sample when due.
    pub fn step(&mut self) -> Result<FrameResult, ServeError> {
        self.link.poll(&mut self.inbox)?;
        while let Some(msg) = self.inbox.pop_front() {
            if let Some(a) = self.apply(msg) {
                self.log.push(a);
            }
        }
        let r = self.lp.advance()?;
        let id = r.frame_index as u32;
        if self.ring.len() == self.ring_len {
            self.ring.pop_front();
        }
        self.ring.push_back((id, r.image.clone()));
        if r.frame_index % self.sample_every as u64 == 0 {
            // best effort: a full socket buffer just drops the sample
            match self.link.send_sample(id, &r.image.decimate(self.sample_every)) {
                Ok(_) => {}
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => {}
                Err(e) => return Err(e.into()),
            }
        }
        Ok(r)
    }
}
