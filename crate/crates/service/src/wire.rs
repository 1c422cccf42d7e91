//! JSON encoding shared by the HTTP service and the command line.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;
use suprec::numfmt::g17;

/// Compact JSON with every float written to 17 significant digits.
#[derive(Debug, Clone, Copy, Default)]
pub struct G17Formatter;

impl Formatter for G17Formatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        // serde_json routes non-finite values to write_null before this point
        writer.write_all(g17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes `value` the way response bodies are written, trailing newline
/// included, so `suprec power --json` and `POST /v1/power` agree byte for byte.
pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut buf = Vec::with_capacity(256);
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, G17Formatter);
    value
        .serialize(&mut ser)
        .expect("response types serialize infallibly");
    buf.push(b'\n');
    buf
}
