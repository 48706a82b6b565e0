// SPDX-License-Identifier: Apache-2.0

//! Cloud files: one JSON header line, then CSV rows of coordinates with an
//! optional trailing weight column.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::generators::GeneratorSpec;
use crate::geometry::PointCloud;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudHeader {
    pub ambient_dim: usize,
    pub resolution: f64,
    pub count: usize,
    #[serde(default)]
    pub weights: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
}

/// Writes `cloud` with its header. Coordinates use the shortest round-trip
/// decimal form, so reading the file back gives the same bits.
pub fn write_cloud<W: Write>(out: W, cloud: &PointCloud<f64>, generator: Option<&GeneratorSpec>) -> Result<(), String> {
    let header = CloudHeader {
        ambient_dim: cloud.dim(),
        resolution: cloud.resolution(),
        count: cloud.len(),
        weights: cloud.weights().is_some(),
        generator: generator.cloned(),
    };
    let mut out = std::io::BufWriter::new(out);
    let line = serde_json::to_string(&header).map_err(|e| e.to_string())?;
    writeln!(out, "{line}").map_err(|e| e.to_string())?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let mut row: Vec<String> = Vec::with_capacity(cloud.dim() + 1);
    for (i, p) in cloud.points().enumerate() {
        row.clear();
        row.extend(p.iter().map(|x| x.to_string()));
        if header.weights {
            row.push(cloud.weight(i).to_string());
        }
        w.write_record(&row).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

pub fn read_cloud<R: Read>(input: R) -> Result<(CloudHeader, PointCloud<f64>), String> {
    let mut input = BufReader::new(input);
    let mut first = String::new();
    input.read_line(&mut first).map_err(|e| format!("reading header: {e}"))?;
    let header: CloudHeader = serde_json::from_str(first.trim()).map_err(|e| format!("bad header: {e}"))?;
    let width = header.ambient_dim + usize::from(header.weights);
    let mut coords = Vec::with_capacity(header.count * header.ambient_dim);
    let mut weights = Vec::new();
    let mut rows = 0usize;
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
    for rec in r.records() {
        let rec = rec.map_err(|e| format!("bad row: {e}"))?;
        if rec.len() != width {
            return Err(format!("row {}: expected {width} fields, got {}", rows + 1, rec.len()));
        }
        for (j, f) in rec.iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| format!("row {}: not a number: {f:?}", rows + 1))?;
            if j < header.ambient_dim {
                coords.push(v);
            } else {
                weights.push(v);
            }
        }
        rows += 1;
    }
    if rows != header.count {
        return Err(format!("header declares {} points, body has {rows}", header.count));
    }
    let mut cloud = PointCloud::from_flat(header.ambient_dim, coords, header.resolution).map_err(|e| e.to_string())?;
    if header.weights {
        cloud = cloud.with_weights(weights).map_err(|e| e.to_string())?;
    }
    Ok((header, cloud))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let spec = GeneratorSpec::Koch { ratio: 1.0 / 3.0, depth: 3 };
        let cloud: PointCloud<f64> = spec.generate().unwrap();
        let cloud = cloud.clone().with_weights(vec![0.1; cloud.len()]).unwrap();
        let mut buf = Vec::new();
        write_cloud(&mut buf, &cloud, Some(&spec)).unwrap();
        let (h, back) = read_cloud(&buf[..]).unwrap();
        assert_eq!(h.generator, Some(spec));
        assert_eq!(back, cloud);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let bad = [
            "not json\n1,2\n",
            "{\"ambient_dim\":2,\"resolution\":0.1,\"count\":2}\n0,0\n",
            "{\"ambient_dim\":2,\"resolution\":0.1,\"count\":1}\n0,0,0\n",
            "{\"ambient_dim\":2,\"resolution\":0.1,\"count\":1}\n0,x\n",
        ];
        for b in bad {
            assert!(read_cloud(b.as_bytes()).is_err(), "{b}");
        }
    }
}
