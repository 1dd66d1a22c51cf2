//! Classic libpcap file format.
//!
//! A file is a 24-byte global header followed by records, each a 16-byte
//! record header plus `incl_len` bytes of frame data. The magic number fixes
//! both the byte order of every later header field and the timestamp
//! resolution (microseconds or nanoseconds).

use std::io::{self, Read, Write};

use super::{CaptureError, CaptureRecord, Timestamp};

pub const MAGIC_MICROS: u32 = 0xa1b2_c3d4;
pub const MAGIC_NANOS: u32 = 0xa1b2_3c4d;

pub const GLOBAL_HEADER_LEN: usize = 24;
pub const RECORD_HEADER_LEN: usize = 16;

/// Link-layer header type for Ethernet (`LINKTYPE_ETHERNET`).
pub const LINKTYPE_ETHERNET: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ByteOrder {
    Little,
    Big,
}

impl ByteOrder {
    fn u16(self, b: [u8; 2]) -> u16 {
        match self {
            ByteOrder::Little => u16::from_le_bytes(b),
            ByteOrder::Big => u16::from_be_bytes(b),
        }
    }

    fn u32(self, b: [u8; 4]) -> u32 {
        match self {
            ByteOrder::Little => u32::from_le_bytes(b),
            ByteOrder::Big => u32::from_be_bytes(b),
        }
    }

    fn put_u16(self, v: u16) -> [u8; 2] {
        match self {
            ByteOrder::Little => v.to_le_bytes(),
            ByteOrder::Big => v.to_be_bytes(),
        }
    }

    fn put_u32(self, v: u32) -> [u8; 4] {
        match self {
            ByteOrder::Little => v.to_le_bytes(),
            ByteOrder::Big => v.to_be_bytes(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Micros,
    Nanos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalHeader {
    pub byte_order: ByteOrder,
    pub precision: Precision,
    pub version_major: u16,
    pub version_minor: u16,
    pub thiszone: i32,
    pub sigfigs: u32,
    pub snaplen: u32,
    pub link_type: u32,
}

impl GlobalHeader {
    pub fn new(link_type: u32) -> Self {
        GlobalHeader {
            byte_order: ByteOrder::Little,
            precision: Precision::Micros,
            version_major: 2,
            version_minor: 4,
            thiszone: 0,
            sigfigs: 0,
            snaplen: 65535,
            link_type,
        }
    }

    pub fn parse(buf: &[u8]) -> Result<Self, CaptureError> {
        if buf.len() < GLOBAL_HEADER_LEN {
            return Err(CaptureError::UnsupportedFormat(format!(
                "stream holds {} bytes, a pcap global header needs {GLOBAL_HEADER_LEN}",
                buf.len()
            )));
        }
        let magic_le = u32::from_le_bytes(buf[0..4].try_into().unwrap());
        let (byte_order, precision) = match magic_le {
            MAGIC_MICROS => (ByteOrder::Little, Precision::Micros),
            MAGIC_NANOS => (ByteOrder::Little, Precision::Nanos),
            m if m.swap_bytes() == MAGIC_MICROS => (ByteOrder::Big, Precision::Micros),
            m if m.swap_bytes() == MAGIC_NANOS => (ByteOrder::Big, Precision::Nanos),
            m => {
                return Err(CaptureError::UnsupportedFormat(format!(
                    "bad magic number {:02x?}",
                    m.to_le_bytes()
                )))
            }
        };
        let o = byte_order;
        Ok(GlobalHeader {
            byte_order,
            precision,
            version_major: o.u16([buf[4], buf[5]]),
            version_minor: o.u16([buf[6], buf[7]]),
            thiszone: o.u32(buf[8..12].try_into().unwrap()) as i32,
            sigfigs: o.u32(buf[12..16].try_into().unwrap()),
            snaplen: o.u32(buf[16..20].try_into().unwrap()),
            link_type: o.u32(buf[20..24].try_into().unwrap()),
        })
    }

    pub fn to_bytes(&self) -> [u8; GLOBAL_HEADER_LEN] {
        let o = self.byte_order;
        let magic = match self.precision {
            Precision::Micros => MAGIC_MICROS,
            Precision::Nanos => MAGIC_NANOS,
        };
        let mut out = [0u8; GLOBAL_HEADER_LEN];
        out[0..4].copy_from_slice(&o.put_u32(magic));
        out[4..6].copy_from_slice(&o.put_u16(self.version_major));
        out[6..8].copy_from_slice(&o.put_u16(self.version_minor));
        out[8..12].copy_from_slice(&o.put_u32(self.thiszone as u32));
        out[12..16].copy_from_slice(&o.put_u32(self.sigfigs));
        out[16..20].copy_from_slice(&o.put_u32(self.snaplen));
        out[20..24].copy_from_slice(&o.put_u32(self.link_type));
        out
    }
}

/// Streaming reader over a pcap byte stream.
///
/// Records are yielded in file order. Nanosecond files are down-converted to
/// microsecond timestamps.
pub struct PcapReader<R> {
    inner: R,
    header: GlobalHeader,
    offset: u64,
    index: usize,
    failed: bool,
}

impl<R: Read> PcapReader<R> {
    pub fn new(mut inner: R) -> Result<Self, CaptureError> {
        let mut buf = [0u8; GLOBAL_HEADER_LEN];
        let got = read_full(&mut inner, &mut buf)?;
        let header = GlobalHeader::parse(&buf[..got])?;
        Ok(PcapReader {
            inner,
            header,
            offset: GLOBAL_HEADER_LEN as u64,
            index: 0,
            failed: false,
        })
    }

    pub fn header(&self) -> &GlobalHeader {
        &self.header
    }

    pub fn link_type(&self) -> u32 {
        self.header.link_type
    }

    /// Byte offset of the next unread record header.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    /// Number of records returned so far.
    pub fn records_read(&self) -> usize {
        self.index
    }

    pub fn next_record(&mut self) -> Result<Option<CaptureRecord>, CaptureError> {
        if self.failed {
            return Ok(None);
        }
        let start = self.offset;
        let mut hdr = [0u8; RECORD_HEADER_LEN];
        let got = read_full(&mut self.inner, &mut hdr)?;
        if got == 0 {
            return Ok(None);
        }
        if got < RECORD_HEADER_LEN {
            self.failed = true;
            return Err(CaptureError::Truncated {
                offset: start,
                record: self.index,
                what: "record header",
            });
        }
        let o = self.header.byte_order;
        let ts_sec = o.u32(hdr[0..4].try_into().unwrap());
        let ts_frac = o.u32(hdr[4..8].try_into().unwrap());
        let incl_len = o.u32(hdr[8..12].try_into().unwrap());
        let orig_len = o.u32(hdr[12..16].try_into().unwrap());

        let mut data = vec![0u8; incl_len as usize];
        let got = read_full(&mut self.inner, &mut data)?;
        if got < data.len() {
            self.failed = true;
            return Err(CaptureError::Truncated {
                offset: start,
                record: self.index,
                what: "record body",
            });
        }
        self.offset = start + RECORD_HEADER_LEN as u64 + incl_len as u64;
        self.index += 1;

        let micros = match self.header.precision {
            Precision::Micros => ts_frac,
            Precision::Nanos => ts_frac / 1000,
        };
        Ok(Some(CaptureRecord::new(
            Timestamp::new(ts_sec, micros),
            orig_len,
            data,
        )))
    }
}

impl<R: Read> Iterator for PcapReader<R> {
    type Item = Result<CaptureRecord, CaptureError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_record().transpose()
    }
}

/// Reads a whole capture held in memory.
pub fn read_capture(bytes: &[u8]) -> Result<(Vec<CaptureRecord>, u32), CaptureError> {
    let reader = PcapReader::new(bytes)?;
    let link_type = reader.link_type();
    let records = reader.collect::<Result<Vec<_>, _>>()?;
    Ok((records, link_type))
}

pub struct PcapWriter<W> {
    inner: W,
    header: GlobalHeader,
}

impl<W: Write> PcapWriter<W> {
    pub fn new(mut inner: W, header: GlobalHeader) -> io::Result<Self> {
        inner.write_all(&header.to_bytes())?;
        Ok(PcapWriter { inner, header })
    }

    pub fn ethernet(inner: W) -> io::Result<Self> {
        Self::new(inner, GlobalHeader::new(LINKTYPE_ETHERNET))
    }

    pub fn write_record(&mut self, record: &CaptureRecord) -> io::Result<()> {
        let o = self.header.byte_order;
        let frac = match self.header.precision {
            Precision::Micros => record.timestamp.micros,
            Precision::Nanos => record.timestamp.micros * 1000,
        };
        let mut hdr = [0u8; RECORD_HEADER_LEN];
        hdr[0..4].copy_from_slice(&o.put_u32(record.timestamp.secs));
        hdr[4..8].copy_from_slice(&o.put_u32(frac));
        hdr[8..12].copy_from_slice(&o.put_u32(record.captured_length()));
        hdr[12..16].copy_from_slice(&o.put_u32(record.original_length));
        self.inner.write_all(&hdr)?;
        self.inner.write_all(&record.data)
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}
