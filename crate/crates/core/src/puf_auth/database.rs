use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;

use super::{recover_response, Challenge, License, PufDevice, PufError, Response, Width};
use crate::messages::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrPair {
    pub challenge: Challenge,
    pub response: Response,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
}

impl Verdict {
    pub fn is_accept(self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

/// Challenge-response pairs held by the border router, one per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrDatabase {
    capacity: usize,
    width: Width,
    entries: BTreeMap<NodeId, CrPair>,
}

impl CrDatabase {
    pub fn new(capacity: usize, width: Width) -> Self {
        CrDatabase { capacity, width, entries: BTreeMap::new() }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn width(&self) -> Width {
        self.width
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, node: NodeId) -> Option<&CrPair> {
        self.entries.get(&node)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &CrPair)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    /// Registration phase: draw a challenge, read the device response, store
    /// the pair and hand back the license to provision onto the node.
    pub fn register_node<R: Rng + ?Sized>(
        &mut self,
        node: NodeId,
        device: &PufDevice,
        rng: &mut R,
    ) -> Result<(Challenge, License), PufError> {
        if device.width() != self.width {
            return Err(PufError::WidthMismatch { device: device.width().bits(), database: self.width.bits() });
        }
        self.check_insertable(node)?;
        let ch = device.draw_challenge(rng)?;
        let r = device.derive_response(ch)?;
        self.entries.insert(node, CrPair { challenge: ch, response: r });
        Ok((ch, super::generate_license(ch, r)))
    }

    /// Stores an externally provisioned pair.
    pub fn insert(&mut self, node: NodeId, pair: CrPair) -> Result<(), PufError> {
        for w in [pair.challenge.width(), pair.response.width()] {
            if w != self.width {
                return Err(PufError::WidthMismatch { device: w.bits(), database: self.width.bits() });
            }
        }
        self.check_insertable(node)?;
        self.entries.insert(node, pair);
        Ok(())
    }

    fn check_insertable(&self, node: NodeId) -> Result<(), PufError> {
        if self.entries.contains_key(&node) {
            return Err(PufError::AlreadyRegistered(node));
        }
        if self.entries.len() >= self.capacity {
            return Err(PufError::CapacityExceeded(self.capacity));
        }
        Ok(())
    }

    /// Accept iff `claimed` is registered and `challenge XOR license` equals
    /// the stored response.
    pub fn verify_license(&self, claimed: NodeId, l: License) -> Verdict {
        match self.entries.get(&claimed) {
            Some(pair) if l.width() == self.width => {
                if recover_response(pair.challenge, l) == pair.response {
                    Verdict::Accept
                } else {
                    Verdict::Reject
                }
            }
            _ => Verdict::Reject,
        }
    }

    /// One `node_id<TAB>CH_hex<TAB>R_hex` line per entry, ascending node id.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), PufError> {
        let digits = self.width.bytes() * 2;
        for (node, pair) in &self.entries {
            writeln!(out, "{}\t{:0d$x}\t{:0d$x}", node.0, pair.challenge.value(), pair.response.value(), d = digits)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Parses the export format. The width is taken from the hex digit count
    /// of the first entry (8 bits when the file is empty); blank lines and
    /// `#` comments are skipped.
    pub fn read_from<R: BufRead>(input: R, capacity: usize) -> Result<Self, PufError> {
        let mut db: Option<CrDatabase> = None;
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let parse_err = |reason: String| PufError::Parse { line: lineno, reason };
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() != 3 {
                return Err(parse_err(format!("expected 3 tab-separated fields, got {}", fields.len())));
            }
            let node: u16 = fields[0].parse().map_err(|_| parse_err(format!("bad node id {:?}", fields[0])))?;
            if fields[1].len() != fields[2].len() || !fields[1].len().is_multiple_of(2) {
                return Err(parse_err("challenge and response must have equal even hex length".into()));
            }
            let width = Width::new(fields[1].len() as u32 * 4).map_err(|e| parse_err(e.to_string()))?;
            let ch = u64::from_str_radix(fields[1], 16)
                .map_err(|_| parse_err(format!("bad challenge hex {:?}", fields[1])))?;
            let r = u64::from_str_radix(fields[2], 16)
                .map_err(|_| parse_err(format!("bad response hex {:?}", fields[2])))?;
            let db = db.get_or_insert_with(|| CrDatabase::new(capacity, width));
            let pair = CrPair {
                challenge: Challenge::new(ch, width).map_err(|e| parse_err(e.to_string()))?,
                response: Response::new(r, width).map_err(|e| parse_err(e.to_string()))?,
            };
            db.insert(NodeId(node), pair).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(db.unwrap_or_else(|| CrDatabase::new(capacity, Width::W8)))
    }
}
