//! Canonical JSON files for states and observables.
//!
//! ```text
//! {"kind":"pure"|"density"|"hermitian",
//!  "dims":{"a":..,"b":..} | {"d1a":..,"d1b":..,"d2a":..,"d2b":..},
//!  "data":[[re,im],...] | [[[re,im],...],...]}
//! ```
//!
//! Vectors are flat lists of `[re, im]` pairs, matrices are lists of rows,
//! both in the A-major index order. Encoding writes keys in the order above
//! and every number with 17 significant digits, so equal objects hash equally.

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{c64, BipartiteDims, ComplexMatrix, ComplexVector, C64};
use crate::states::{validate_density, DensityMatrix, FourPartyDims, HermitianObservable, PureState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Pure,
    Density,
    Hermitian,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Pure => "pure",
            Kind::Density => "density",
            Kind::Hermitian => "hermitian",
        }
    }
}

/// Dimension header of a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dims {
    Bipartite(BipartiteDims),
    FourParty(FourPartyDims),
}

impl Dims {
    /// The A|B split the payload is validated against; four-party files use subsystem 1 | subsystem 2.
    pub fn split(&self) -> Result<BipartiteDims> {
        match self {
            Dims::Bipartite(d) => Ok(*d),
            Dims::FourParty(d) => d.system_split(),
        }
    }

    pub fn four_party(&self) -> Option<FourPartyDims> {
        match self {
            Dims::FourParty(d) => Some(*d),
            Dims::Bipartite(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Pure(PureState),
    Density(DensityMatrix),
    Hermitian(HermitianObservable),
}

/// A decoded, validated file.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub dims: Dims,
    pub payload: Payload,
}

impl Document {
    pub fn pure(psi: PureState) -> Self {
        Document {
            dims: Dims::Bipartite(psi.dims()),
            payload: Payload::Pure(psi),
        }
    }

    pub fn density(rho: DensityMatrix) -> Self {
        Document {
            dims: Dims::Bipartite(rho.dims()),
            payload: Payload::Density(rho),
        }
    }

    pub fn hermitian(h: HermitianObservable) -> Self {
        Document {
            dims: Dims::Bipartite(h.dims()),
            payload: Payload::Hermitian(h),
        }
    }

    /// Attaches a four-party header; the payload's dims must equal its system split.
    pub fn with_four_party(mut self, dims: FourPartyDims) -> Result<Self> {
        let split = dims.system_split()?;
        if split != self.payload_dims() {
            return Err(Error::dimension("four-party dims do not match the payload"));
        }
        self.dims = Dims::FourParty(dims);
        Ok(self)
    }

    pub fn kind(&self) -> Kind {
        match self.payload {
            Payload::Pure(_) => Kind::Pure,
            Payload::Density(_) => Kind::Density,
            Payload::Hermitian(_) => Kind::Hermitian,
        }
    }

    fn payload_dims(&self) -> BipartiteDims {
        match &self.payload {
            Payload::Pure(p) => p.dims(),
            Payload::Density(r) => r.dims(),
            Payload::Hermitian(h) => h.dims(),
        }
    }

    /// Canonical encoding, newline-terminated.
    pub fn encode(&self) -> String {
        let mut out = String::new();
        out.push_str("{\"kind\":\"");
        out.push_str(self.kind().as_str());
        out.push_str("\",\"dims\":");
        match self.dims {
            Dims::Bipartite(d) => out.push_str(&format!("{{\"a\":{},\"b\":{}}}", d.a, d.b)),
            Dims::FourParty(d) => out.push_str(&format!(
                "{{\"d1a\":{},\"d1b\":{},\"d2a\":{},\"d2b\":{}}}",
                d.d1a, d.d1b, d.d2a, d.d2b
            )),
        }
        out.push_str(",\"data\":");
        match &self.payload {
            Payload::Pure(p) => write_vector(&mut out, p.amplitudes()),
            Payload::Density(r) => write_matrix(&mut out, r.matrix()),
            Payload::Hermitian(h) => write_matrix(&mut out, h.matrix()),
        }
        out.push_str("}\n");
        out
    }

    /// SHA-256 of the canonical encoding, lowercase hex.
    pub fn digest(&self) -> String {
        sha256_hex(self.encode().as_bytes())
    }

    pub fn decode(text: &str) -> Result<Document> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::schema("$", format!("invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::schema("$", "expected an object"))?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "kind" | "dims" | "data") {
                return Err(Error::schema(format!("$.{key}"), "unknown field"));
            }
        }
        let kind = match obj.get("kind").and_then(Value::as_str) {
            Some("pure") => Kind::Pure,
            Some("density") => Kind::Density,
            Some("hermitian") => Kind::Hermitian,
            Some(other) => return Err(Error::schema("$.kind", format!("unknown kind {other:?}"))),
            None => return Err(Error::schema("$.kind", "missing string field")),
        };
        let dims = decode_dims(
            obj.get("dims")
                .ok_or_else(|| Error::schema("$.dims", "missing field"))?,
        )?;
        let split = dims.split()?;
        let data = obj
            .get("data")
            .ok_or_else(|| Error::schema("$.data", "missing field"))?;
        let n = split.total();
        let payload = match kind {
            Kind::Pure => {
                let v = decode_vector(data, n, "$.data")?;
                Payload::Pure(PureState::new(split, v)?)
            }
            Kind::Density => Payload::Density(validate_density(decode_matrix(data, n, "$.data")?, split)?),
            Kind::Hermitian => Payload::Hermitian(HermitianObservable::new(decode_matrix(data, n, "$.data")?, split)?),
        };
        Ok(Document { dims, payload })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_number(out: &mut String, x: f64) {
    out.push_str(&format!("{x:.16e}"));
}

fn write_pair(out: &mut String, z: C64) {
    out.push('[');
    write_number(out, z.re);
    out.push(',');
    write_number(out, z.im);
    out.push(']');
}

fn write_vector(out: &mut String, v: &ComplexVector) {
    out.push('[');
    for (i, z) in v.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_pair(out, *z);
    }
    out.push(']');
}

fn write_matrix(out: &mut String, m: &ComplexMatrix) {
    out.push('[');
    for r in 0..m.nrows() {
        if r > 0 {
            out.push(',');
        }
        out.push('[');
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(',');
            }
            write_pair(out, m[(r, c)]);
        }
        out.push(']');
    }
    out.push(']');
}

fn positive(obj: &serde_json::Map<String, Value>, key: &str) -> Result<usize> {
    let path = format!("$.dims.{key}");
    let v = obj.get(key).ok_or_else(|| Error::schema(&path, "missing field"))?;
    match v.as_u64() {
        Some(n) if n >= 1 => Ok(n as usize),
        _ => Err(Error::schema(path, "expected a positive integer")),
    }
}

fn decode_dims(value: &Value) -> Result<Dims> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::schema("$.dims", "expected an object"))?;
    let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    keys.sort_unstable();
    match keys.as_slice() {
        ["a", "b"] => Ok(Dims::Bipartite(BipartiteDims::new(
            positive(obj, "a")?,
            positive(obj, "b")?,
        )?)),
        ["d1a", "d1b", "d2a", "d2b"] => Ok(Dims::FourParty(FourPartyDims::new(
            positive(obj, "d1a")?,
            positive(obj, "d1b")?,
            positive(obj, "d2a")?,
            positive(obj, "d2b")?,
        )?)),
        _ => Err(Error::schema("$.dims", "expected keys a, b or d1a, d1b, d2a, d2b")),
    }
}

fn decode_pair(value: &Value, path: &str) -> Result<C64> {
    let arr = value
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::schema(path, "expected [re, im]"))?;
    let part = |k: usize| {
        arr[k]
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::schema(format!("{path}[{k}]"), "expected a finite number"))
    };
    Ok(c64(part(0)?, part(1)?))
}

fn decode_vector(value: &Value, n: usize, path: &str) -> Result<ComplexVector> {
    let arr = value
        .as_array()
        .ok_or_else(|| Error::schema(path, "expected an array"))?;
    if arr.len() != n {
        return Err(Error::schema(
            path,
            format!("expected {n} entries, found {}", arr.len()),
        ));
    }
    let entries = arr
        .iter()
        .enumerate()
        .map(|(i, v)| decode_pair(v, &format!("{path}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexVector::from_vec(entries))
}

fn decode_matrix(value: &Value, n: usize, path: &str) -> Result<ComplexMatrix> {
    let rows = value
        .as_array()
        .ok_or_else(|| Error::schema(path, "expected an array of rows"))?;
    if rows.len() != n {
        return Err(Error::schema(path, format!("expected {n} rows, found {}", rows.len())));
    }
    let mut m = ComplexMatrix::zeros(n, n);
    for (r, row) in rows.iter().enumerate() {
        let v = decode_vector(row, n, &format!("{path}[{r}]"))?;
        m.set_row(r, &v.transpose());
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{sample_density, sample_haar_pure, sample_hermitian};

    fn d22() -> BipartiteDims {
        BipartiteDims::new(2, 2).unwrap()
    }

    #[test]
    fn product_basis_state_layout() {
        let v = ComplexVector::from_vec(vec![c64(1., 0.), c64(0., 0.), c64(0., 0.), c64(0., 0.)]);
        let doc = Document::pure(PureState::new(d22(), v).unwrap());
        let parsed: Value = serde_json::from_str(&doc.encode()).unwrap();
        let data: Vec<Vec<f64>> = serde_json::from_value(parsed["data"].clone()).unwrap();
        assert_eq!(data, vec![vec![1., 0.], vec![0., 0.], vec![0., 0.], vec![0., 0.]]);
        // integer literals decode too
        let text = r#"{"kind":"pure","dims":{"a":2,"b":2},"data":[[1,0],[0,0],[0,0],[0,0]]}"#;
        assert_eq!(Document::decode(text).unwrap(), doc);
    }

    #[test]
    fn canonical_round_trip_is_byte_identical() {
        let docs = [
            Document::pure(sample_haar_pure(d22(), 1)),
            Document::density(sample_density(BipartiteDims::new(2, 3).unwrap(), 3, 2).unwrap()),
            Document::hermitian(sample_hermitian(d22(), 3)),
            Document::density(sample_density(BipartiteDims::new(4, 4).unwrap(), 2, 4).unwrap())
                .with_four_party(FourPartyDims::new(2, 2, 2, 2).unwrap())
                .unwrap(),
        ];
        for doc in docs {
            let text = doc.encode();
            let back = Document::decode(&text).unwrap();
            assert_eq!(back.encode(), text);
            assert_eq!(back.digest(), doc.digest());
        }
    }

    #[test]
    fn psd_violation_names_eigenvalue() {
        let text = r#"{"kind":"density","dims":{"a":1,"b":2},"data":[[[1.001,0],[0,0]],[[0,0],[-0.001,0]]]}"#;
        match Document::decode(text) {
            Err(Error::NotPositive { eigenvalue }) => assert!((eigenvalue + 1e-3).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_errors_carry_paths() {
        let cases = [
            (r#"[1]"#, "$"),
            (r#"{"kind":"mixed","dims":{"a":1,"b":1},"data":[]}"#, "$.kind"),
            (r#"{"kind":"pure","dims":{"a":0,"b":1},"data":[]}"#, "$.dims.a"),
            (r#"{"kind":"pure","dims":{"a":1,"b":2},"data":[[1,0]]}"#, "$.data"),
            (
                r#"{"kind":"pure","dims":{"a":1,"b":2},"data":[[1,0],[0,"x"]]}"#,
                "$.data[1][1]",
            ),
            (
                r#"{"kind":"hermitian","dims":{"a":1,"b":2},"data":[[[1,0],[0,0]],[[0,0]]]}"#,
                "$.data[1]",
            ),
            (
                r#"{"kind":"pure","dims":{"a":1,"b":1},"data":[[1,0]],"extra":1}"#,
                "$.extra",
            ),
        ];
        for (text, expected) in cases {
            match Document::decode(text) {
                Err(Error::Schema { path, .. }) => assert_eq!(path, expected, "{text}"),
                other => panic!("{text}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn invalid_payloads_are_rejected() {
        let unnormalized = r#"{"kind":"pure","dims":{"a":1,"b":2},"data":[[1,0],[1,0]]}"#;
        assert!(matches!(Document::decode(unnormalized), Err(Error::Validation { .. })));
        let bad_trace = r#"{"kind":"density","dims":{"a":1,"b":2},"data":[[[0.505,0],[0,0]],[[0,0],[0.505,0]]]}"#;
        assert!(matches!(Document::decode(bad_trace), Err(Error::Validation { .. })));
        let non_hermitian = r#"{"kind":"hermitian","dims":{"a":1,"b":2},"data":[[[0,0],[1,0]],[[0,0],[0,0]]]}"#;
        assert!(matches!(Document::decode(non_hermitian), Err(Error::Validation { .. })));
    }

    #[test]
    fn four_party_header_must_match() {
        let doc = Document::density(sample_density(d22(), 1, 0).unwrap());
        assert!(doc.with_four_party(FourPartyDims::new(2, 2, 2, 2).unwrap()).is_err());
    }
}
