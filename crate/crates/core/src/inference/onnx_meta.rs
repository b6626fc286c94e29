//! Just enough protobuf decoding to read the declared graph inputs and
//! outputs of an ONNX `ModelProto`, so model arity can be checked without a
//! runtime.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorInfo {
    pub name: String,
    /// `None` marks a symbolic or missing dimension.
    pub dims: Vec<Option<i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OnnxIo {
    pub inputs: Vec<TensorInfo>,
    pub outputs: Vec<TensorInfo>,
}

enum Value<'a> {
    Varint(u64),
    Bytes(&'a [u8]),
    Fixed,
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn varint(&mut self) -> Result<u64> {
        let mut out = 0u64;
        for shift in (0..64).step_by(7) {
            let b = *self.buf.get(self.pos).ok_or_else(|| Error::invalid("truncated varint in ONNX model"))?;
            self.pos += 1;
            out |= ((b & 0x7f) as u64) << shift;
            if b & 0x80 == 0 {
                return Ok(out);
            }
        }
        Err(Error::invalid("overlong varint in ONNX model"))
    }

    fn next(&mut self) -> Result<Option<(u64, Value<'a>)>> {
        if self.pos >= self.buf.len() {
            return Ok(None);
        }
        let key = self.varint()?;
        let field = key >> 3;
        let value = match key & 7 {
            0 => Value::Varint(self.varint()?),
            1 | 5 => {
                let n = if key & 7 == 1 { 8 } else { 4 };
                if self.pos + n > self.buf.len() {
                    return Err(Error::invalid("truncated fixed field in ONNX model"));
                }
                self.pos += n;
                Value::Fixed
            }
            2 => {
                let len = self.varint()? as usize;
                let end = self.pos.checked_add(len).filter(|&e| e <= self.buf.len());
                let end = end.ok_or_else(|| Error::invalid("truncated length-delimited field in ONNX model"))?;
                let bytes = &self.buf[self.pos..end];
                self.pos = end;
                Value::Bytes(bytes)
            }
            w => return Err(Error::invalid(format!("unsupported protobuf wire type {w}"))),
        };
        Ok(Some((field, value)))
    }
}

fn fields<'a>(buf: &'a [u8], mut f: impl FnMut(u64, Value<'a>) -> Result<()>) -> Result<()> {
    let mut r = Reader::new(buf);
    while let Some((field, value)) = r.next()? {
        f(field, value)?;
    }
    Ok(())
}

fn dimension(buf: &[u8]) -> Result<Option<i64>> {
    let mut dim = None;
    fields(buf, |field, v| {
        if let (1, Value::Varint(n)) = (field, v) {
            dim = Some(n as i64);
        }
        Ok(())
    })?;
    Ok(dim)
}

fn value_info(buf: &[u8]) -> Result<TensorInfo> {
    let mut info = TensorInfo { name: String::new(), dims: Vec::new() };
    fields(buf, |field, v| {
        match (field, v) {
            (1, Value::Bytes(b)) => info.name = String::from_utf8_lossy(b).into_owned(),
            // TypeProto → tensor_type → shape → dim*
            (2, Value::Bytes(ty)) => fields(ty, |f, v| {
                if let (1, Value::Bytes(tensor)) = (f, v) {
                    fields(tensor, |f, v| {
                        if let (2, Value::Bytes(shape)) = (f, v) {
                            fields(shape, |f, v| {
                                if let (1, Value::Bytes(d)) = (f, v) {
                                    info.dims.push(dimension(d)?);
                                }
                                Ok(())
                            })?;
                        }
                        Ok(())
                    })?;
                }
                Ok(())
            })?,
            _ => {}
        }
        Ok(())
    })?;
    Ok(info)
}

/// Reads the graph input/output declarations of a serialized ONNX model.
pub fn read_onnx_io(model: &[u8]) -> Result<OnnxIo> {
    let mut io = OnnxIo::default();
    let mut saw_graph = false;
    fields(model, |field, v| {
        if let (7, Value::Bytes(graph)) = (field, v) {
            saw_graph = true;
            fields(graph, |f, v| {
                match (f, v) {
                    (11, Value::Bytes(b)) => io.inputs.push(value_info(b)?),
                    (12, Value::Bytes(b)) => io.outputs.push(value_info(b)?),
                    _ => {}
                }
                Ok(())
            })?;
        }
        Ok(())
    })?;
    if !saw_graph {
        return Err(Error::invalid("ONNX model has no graph"));
    }
    Ok(io)
}
