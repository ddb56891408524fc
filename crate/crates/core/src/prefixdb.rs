//! Address-to-origin mapping and hijackability classification.
//!
//! The index answers longest-prefix-match queries over RIB-derived
//! `<prefix> TAB <asn>` entries. Each prefix is then sorted into one of four
//! categories describing what an attacker would have to announce to pull its
//! traffic, driven by route-object (ROA) coverage and the operational
//! filtering threshold (/24 for v4, /48 for v6):
//!
//!   1. no covering ROA, shorter than the threshold: a more-specific
//!      announcement wins outright;
//!   2. no covering ROA, at the threshold: an equal-length announcement
//!      competes on route preference;
//!   3. covering ROA with room below maxLength: a valid more-specific wins;
//!   4. covering ROA at maxLength: a forged-origin announcement competes,
//!      one hop longer than the honest one.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::topology::AsId;

pub const V4_FILTER_LEN: u8 = 24;
pub const V6_FILTER_LEN: u8 = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IpPrefix {
    V4 { bits: u32, len: u8 },
    V6 { bits: u128, len: u8 },
}

impl IpPrefix {
    pub fn v4(addr: Ipv4Addr, len: u8) -> Result<IpPrefix> {
        if len > 32 {
            return Err(Error::Validation(format!("v4 prefix length {len} > 32")));
        }
        let bits = u32::from(addr);
        if bits & !mask4(len) != 0 {
            return Err(Error::Validation(format!(
                "host bits set in {addr}/{len}"
            )));
        }
        Ok(IpPrefix::V4 { bits, len })
    }

    pub fn v6(addr: Ipv6Addr, len: u8) -> Result<IpPrefix> {
        if len > 128 {
            return Err(Error::Validation(format!("v6 prefix length {len} > 128")));
        }
        let bits = u128::from(addr);
        if bits & !mask6(len) != 0 {
            return Err(Error::Validation(format!(
                "host bits set in {addr}/{len}"
            )));
        }
        Ok(IpPrefix::V6 { bits, len })
    }

    /// The prefix of the given length containing `ip` (host bits masked off).
    pub fn containing(ip: IpAddr, len: u8) -> Result<IpPrefix> {
        match ip {
            IpAddr::V4(a) => {
                if len > 32 {
                    return Err(Error::Validation(format!("v4 prefix length {len} > 32")));
                }
                Ok(IpPrefix::V4 {
                    bits: u32::from(a) & mask4(len),
                    len,
                })
            }
            IpAddr::V6(a) => {
                if len > 128 {
                    return Err(Error::Validation(format!("v6 prefix length {len} > 128")));
                }
                Ok(IpPrefix::V6 {
                    bits: u128::from(a) & mask6(len),
                    len,
                })
            }
        }
    }

    // A mask length, not a container size; is_empty would be nonsense.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u8 {
        match *self {
            IpPrefix::V4 { len, .. } | IpPrefix::V6 { len, .. } => len,
        }
    }

    pub fn is_v4(&self) -> bool {
        matches!(self, IpPrefix::V4 { .. })
    }

    /// Family-specific filtering threshold: the longest length operators
    /// commonly accept, and so the longest an attacker can announce.
    pub fn filter_len(&self) -> u8 {
        if self.is_v4() {
            V4_FILTER_LEN
        } else {
            V6_FILTER_LEN
        }
    }

    pub fn contains_ip(&self, ip: IpAddr) -> bool {
        match (*self, ip) {
            (IpPrefix::V4 { bits, len }, IpAddr::V4(a)) => u32::from(a) & mask4(len) == bits,
            (IpPrefix::V6 { bits, len }, IpAddr::V6(a)) => u128::from(a) & mask6(len) == bits,
            _ => false,
        }
    }

    /// True iff `other` lies inside `self` (self no longer than other and
    /// network bits agree).
    pub fn contains_prefix(&self, other: &IpPrefix) -> bool {
        match (*self, *other) {
            (IpPrefix::V4 { bits, len }, IpPrefix::V4 { bits: ob, len: ol }) => {
                len <= ol && ob & mask4(len) == bits
            }
            (IpPrefix::V6 { bits, len }, IpPrefix::V6 { bits: ob, len: ol }) => {
                len <= ol && ob & mask6(len) == bits
            }
            _ => false,
        }
    }
}

fn mask4(len: u8) -> u32 {
    if len == 0 {
        0
    } else {
        u32::MAX << (32 - len)
    }
}

fn mask6(len: u8) -> u128 {
    if len == 0 {
        0
    } else {
        u128::MAX << (128 - len)
    }
}

impl fmt::Display for IpPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            IpPrefix::V4 { bits, len } => write!(f, "{}/{}", Ipv4Addr::from(bits), len),
            IpPrefix::V6 { bits, len } => write!(f, "{}/{}", Ipv6Addr::from(bits), len),
        }
    }
}

impl FromStr for IpPrefix {
    type Err = Error;

    fn from_str(s: &str) -> Result<IpPrefix> {
        let (addr, len) = s
            .split_once('/')
            .ok_or_else(|| Error::Validation(format!("missing /length in prefix {s:?}")))?;
        let len: u8 = len
            .trim()
            .parse()
            .map_err(|_| Error::Validation(format!("bad prefix length in {s:?}")))?;
        match addr.trim().parse::<IpAddr>() {
            Ok(IpAddr::V4(a)) => IpPrefix::v4(a, len),
            Ok(IpAddr::V6(a)) => IpPrefix::v6(a, len),
            Err(_) => Err(Error::Validation(format!("bad address in prefix {s:?}"))),
        }
    }
}

/// Longest-prefix-match table. One hash map per (family, length); a lookup
/// walks the populated lengths from most to least specific, so it costs at
/// most one hash probe per distinct prefix length present.
#[derive(Debug, Default)]
pub struct PrefixIndex {
    v4: HashMap<(u8, u32), AsId>,
    v6: HashMap<(u8, u128), AsId>,
    v4_lens: Vec<u8>, // descending, deduped
    v6_lens: Vec<u8>,
    len: usize,
}

impl PrefixIndex {
    pub fn new() -> PrefixIndex {
        PrefixIndex::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Inserting the same prefix twice with the same origin is a no-op; with
    /// a different origin it is an error and the index is left unchanged.
    pub fn insert(&mut self, prefix: IpPrefix, origin: AsId) -> Result<()> {
        match prefix {
            IpPrefix::V4 { bits, len } => match self.v4.get(&(len, bits)) {
                Some(&old) if old != origin => {
                    return Err(Error::Validation(format!(
                        "prefix {prefix} announced by both AS{old} and AS{origin}"
                    )));
                }
                Some(_) => return Ok(()),
                None => {
                    self.v4.insert((len, bits), origin);
                    insert_len(&mut self.v4_lens, len);
                }
            },
            IpPrefix::V6 { bits, len } => match self.v6.get(&(len, bits)) {
                Some(&old) if old != origin => {
                    return Err(Error::Validation(format!(
                        "prefix {prefix} announced by both AS{old} and AS{origin}"
                    )));
                }
                Some(_) => return Ok(()),
                None => {
                    self.v6.insert((len, bits), origin);
                    insert_len(&mut self.v6_lens, len);
                }
            },
        }
        self.len += 1;
        Ok(())
    }

    pub fn lookup(&self, ip: IpAddr) -> Option<(IpPrefix, AsId)> {
        match ip {
            IpAddr::V4(a) => {
                let bits = u32::from(a);
                for &len in &self.v4_lens {
                    let masked = bits & mask4(len);
                    if let Some(&origin) = self.v4.get(&(len, masked)) {
                        return Some((IpPrefix::V4 { bits: masked, len }, origin));
                    }
                }
                None
            }
            IpAddr::V6(a) => {
                let bits = u128::from(a);
                for &len in &self.v6_lens {
                    let masked = bits & mask6(len);
                    if let Some(&origin) = self.v6.get(&(len, masked)) {
                        return Some((IpPrefix::V6 { bits: masked, len }, origin));
                    }
                }
                None
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (IpPrefix, AsId)> + '_ {
        let v4 = self
            .v4
            .iter()
            .map(|(&(len, bits), &o)| (IpPrefix::V4 { bits, len }, o));
        let v6 = self
            .v6
            .iter()
            .map(|(&(len, bits), &o)| (IpPrefix::V6 { bits, len }, o));
        v4.chain(v6)
    }

    /// Entries in canonical order (v4 before v6, then by address and length).
    pub fn sorted_entries(&self) -> Vec<(IpPrefix, AsId)> {
        let mut out: Vec<_> = self.iter().collect();
        out.sort();
        out
    }
}

fn insert_len(lens: &mut Vec<u8>, len: u8) {
    if let Err(pos) = lens.binary_search_by(|l| len.cmp(l)) {
        lens.insert(pos, len);
    }
}

pub fn parse_rib<R: Read>(reader: R, label: &str) -> Result<PrefixIndex> {
    let mut index = PrefixIndex::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (prefix, asn) = line
            .split_once('\t')
            .or_else(|| line.split_once(' '))
            .ok_or_else(|| Error::parse(label, lineno, "expected <prefix>\\t<asn>"))?;
        let prefix: IpPrefix = prefix
            .parse()
            .map_err(|e| Error::parse(label, lineno, format!("{e}")))?;
        let asn: AsId = asn
            .parse()
            .map_err(|e| Error::parse(label, lineno, format!("{e}")))?;
        index
            .insert(prefix, asn)
            .map_err(|e| Error::parse(label, lineno, format!("{e}")))?;
    }
    Ok(index)
}

pub fn load_rib(path: &std::path::Path) -> Result<PrefixIndex> {
    let f = std::fs::File::open(path)?;
    parse_rib(f, &path.display().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoaRecord {
    pub prefix: IpPrefix,
    pub max_length: u8,
    pub origin: AsId,
}

impl RoaRecord {
    pub fn new(prefix: IpPrefix, max_length: u8, origin: AsId) -> Result<RoaRecord> {
        let family_bits = if prefix.is_v4() { 32 } else { 128 };
        if max_length < prefix.len() || max_length > family_bits {
            return Err(Error::Validation(format!(
                "ROA {prefix} maxLength {max_length} outside [{}, {family_bits}]",
                prefix.len()
            )));
        }
        Ok(RoaRecord {
            prefix,
            max_length,
            origin,
        })
    }
}

/// ROA collection indexed for covering queries; `max_len_cover` finds the
/// most permissive maxLength among ROAs whose prefix contains the target.
#[derive(Debug, Default)]
pub struct RoaSet {
    records: Vec<RoaRecord>,
    v4: HashMap<(u8, u32), u8>, // (len, bits) -> largest maxLength
    v6: HashMap<(u8, u128), u8>,
    v4_lens: Vec<u8>,
    v6_lens: Vec<u8>,
}

impl RoaSet {
    pub fn new() -> RoaSet {
        RoaSet::default()
    }

    pub fn from_records(records: Vec<RoaRecord>) -> RoaSet {
        let mut set = RoaSet::new();
        for r in records {
            set.push(r);
        }
        set
    }

    pub fn push(&mut self, r: RoaRecord) {
        match r.prefix {
            IpPrefix::V4 { bits, len } => {
                let e = self.v4.entry((len, bits)).or_insert(0);
                *e = (*e).max(r.max_length);
                insert_len(&mut self.v4_lens, len);
            }
            IpPrefix::V6 { bits, len } => {
                let e = self.v6.entry((len, bits)).or_insert(0);
                *e = (*e).max(r.max_length);
                insert_len(&mut self.v6_lens, len);
            }
        }
        self.records.push(r);
    }

    pub fn records(&self) -> &[RoaRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Largest maxLength over all ROAs covering `prefix`, if any covers it.
    pub fn max_len_cover(&self, prefix: &IpPrefix) -> Option<u8> {
        let mut best: Option<u8> = None;
        match *prefix {
            IpPrefix::V4 { bits, len } => {
                for &l in &self.v4_lens {
                    if l > len {
                        continue;
                    }
                    if let Some(&ml) = self.v4.get(&(l, bits & mask4(l))) {
                        best = Some(best.map_or(ml, |b| b.max(ml)));
                    }
                }
            }
            IpPrefix::V6 { bits, len } => {
                for &l in &self.v6_lens {
                    if l > len {
                        continue;
                    }
                    if let Some(&ml) = self.v6.get(&(l, bits & mask6(l))) {
                        best = Some(best.map_or(ml, |b| b.max(ml)));
                    }
                }
            }
        }
        best
    }
}

/// CSV `prefix,maxLength,originAsn`, `#` comments, optional header line.
pub fn parse_roas<R: Read>(reader: R, label: &str) -> Result<RoaSet> {
    let mut set = RoaSet::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if lineno == 1 && line.to_ascii_lowercase().starts_with("prefix") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::parse(label, lineno, "expected prefix,maxLength,originAsn"));
        }
        let prefix: IpPrefix = fields[0]
            .parse()
            .map_err(|e| Error::parse(label, lineno, format!("{e}")))?;
        let max_length: u8 = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(label, lineno, format!("bad maxLength {:?}", fields[1])))?;
        let origin: AsId = fields[2]
            .parse()
            .map_err(|e| Error::parse(label, lineno, format!("{e}")))?;
        let roa = RoaRecord::new(prefix, max_length, origin)
            .map_err(|e| Error::parse(label, lineno, format!("{e}")))?;
        set.push(roa);
    }
    Ok(set)
}

pub fn load_roas(path: &std::path::Path) -> Result<RoaSet> {
    let f = std::fs::File::open(path)?;
    parse_roas(f, &path.display().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RpkiCategory {
    /// No covering ROA, shorter than the filtering threshold.
    NoRoaShort = 1,
    /// No covering ROA, at (or beyond) the threshold.
    NoRoaAtLimit = 2,
    /// Covering ROA with maxLength headroom.
    RoaBelowMax = 3,
    /// Covering ROA with the prefix already at maxLength.
    RoaAtMax = 4,
}

impl RpkiCategory {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    /// More-specific hijack always possible; no preference competition.
    pub fn always_divertable(self) -> bool {
        matches!(self, RpkiCategory::NoRoaShort | RpkiCategory::RoaBelowMax)
    }

    /// Forged-origin announcement: the attacker path carries the victim AS,
    /// costing one extra hop in the comparison.
    pub fn forged_origin(self) -> bool {
        matches!(self, RpkiCategory::RoaAtMax)
    }
}

impl fmt::Display for RpkiCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

/// Category of a prefix given the ROA set. Total: prefixes at or beyond the
/// relevant limit (filter threshold without a ROA, maxLength with one) get
/// the competition category of their group, so unusual RIB entries such as a
/// bare /25 or a ROA-exceeding length still classify rather than error.
pub fn classify_prefix(prefix: &IpPrefix, roas: &RoaSet) -> RpkiCategory {
    match roas.max_len_cover(prefix) {
        None => {
            if prefix.len() < prefix.filter_len() {
                RpkiCategory::NoRoaShort
            } else {
                RpkiCategory::NoRoaAtLimit
            }
        }
        Some(max_len) => {
            if prefix.len() < max_len {
                RpkiCategory::RoaBelowMax
            } else {
                RpkiCategory::RoaAtMax
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Endpoint {
    pub ip: IpAddr,
    pub prefix: IpPrefix,
    pub origin: AsId,
    pub category: RpkiCategory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    Mapped(Endpoint),
    /// No covering RIB entry; excluded from attack surfaces and reported.
    Unmapped(IpAddr),
}

pub fn resolve_endpoint(ip: IpAddr, index: &PrefixIndex, roas: &RoaSet) -> Resolution {
    match index.lookup(ip) {
        Some((prefix, origin)) => Resolution::Mapped(Endpoint {
            ip,
            prefix,
            origin,
            category: classify_prefix(&prefix, roas),
        }),
        None => Resolution::Unmapped(ip),
    }
}
