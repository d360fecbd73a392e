//! Line-delimited JSON traces. The first line is a header carrying the run's
//! inputs; every further line is one event. Rationals are written as
//! `"num/den"` strings, so re-serializing a parsed trace reproduces it byte
//! for byte.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::engine::{Configuration, Trace, TraceEvent};
use crate::model::RobotModel;
use crate::sched::Schedule;

pub const FORMAT: &str = "lcm-duo-trace/1";

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error("trace is empty")]
    Empty,
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("unsupported trace format {0:?}")]
    Format(String),
    #[error("trace header does not match its events: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scenario: Option<Value>,
    algorithm: String,
    model: RobotModel,
    grid_granted: bool,
    initial: Configuration,
    schedule: Schedule,
}

/// Writes `trace` with an optional scenario echoed into the header.
pub fn write_trace(mut w: impl Write, trace: &Trace, scenario: Option<&Value>) -> Result<(), TraceIoError> {
    let header = Header {
        format: FORMAT.to_string(),
        scenario: scenario.cloned(),
        algorithm: trace.algorithm.clone(),
        model: trace.model,
        grid_granted: trace.grid_granted,
        initial: trace.initial.clone(),
        schedule: trace.schedule.clone(),
    };
    serde_json::to_writer(&mut w, &header).map_err(|e| TraceIoError::Json { line: 1, source: e })?;
    w.write_all(b"\n")?;
    for (i, e) in trace.events.iter().enumerate() {
        serde_json::to_writer(&mut w, e).map_err(|e| TraceIoError::Json { line: i + 2, source: e })?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn trace_to_string(trace: &Trace, scenario: Option<&Value>) -> String {
    let mut buf = Vec::new();
    write_trace(&mut buf, trace, scenario).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// Parses a trace and the scenario its header carries, if any.
pub fn read_trace(r: impl BufRead) -> Result<(Trace, Option<Value>), TraceIoError> {
    let mut lines = r.lines().enumerate().filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()));
    let (_, first) = lines.next().ok_or(TraceIoError::Empty)?;
    let header: Header = serde_json::from_str(&first?).map_err(|e| TraceIoError::Json { line: 1, source: e })?;
    if header.format != FORMAT {
        return Err(TraceIoError::Format(header.format));
    }
    let mut events = Vec::new();
    for (i, line) in lines {
        let e: TraceEvent = serde_json::from_str(&line?).map_err(|e| TraceIoError::Json { line: i + 1, source: e })?;
        if e.time > header.schedule.horizon {
            return Err(TraceIoError::Inconsistent(format!("event at {} after the horizon", e.time)));
        }
        events.push(e);
    }
    let trace = Trace {
        algorithm: header.algorithm,
        model: header.model,
        grid_granted: header.grid_granted,
        initial: header.initial,
        schedule: header.schedule,
        events,
    };
    Ok((trace, header.scenario))
}

pub fn parse_trace(s: &str) -> Result<(Trace, Option<Value>), TraceIoError> {
    read_trace(s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run;
    use crate::exactgeom::Point;
    use crate::protocols::{SimA, TokenPass};
    use crate::sched::{gen_asynch, gen_rsynch, Atomicity};
    use crate::model::RobotId;
    use std::sync::Arc;

    #[test]
    fn round_trip_is_byte_identical() {
        let init = Configuration::initial(&TokenPass, Point::ints(0, 0), Point::ints(3, -1));
        let t = run(&TokenPass, RobotModel::Lumi, &gen_rsynch(1, 5, RobotId::B).unwrap(), &init, false).unwrap();
        let sc = serde_json::json!({"algorithm": {"id": "alg.token"}, "seed": 3});
        let text = trace_to_string(&t, Some(&sc));
        let (back, sc_back) = parse_trace(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(sc_back.as_ref(), Some(&sc));
        assert_eq!(trace_to_string(&back, sc_back.as_ref()), text);
    }

    #[test]
    fn asynch_frames_and_profiles_survive() {
        let sim = SimA::new(Arc::new(TokenPass));
        let mut s = gen_asynch(7, 6, Atomicity::None).unwrap();
        s.randomize_frames(7);
        let init = Configuration::initial(&sim, Point::ints(0, 0), Point::ints(5, 5));
        let t = run(&sim, RobotModel::Fcom, &s, &init, false).unwrap();
        let text = trace_to_string(&t, None);
        let (back, none) = parse_trace(&text).unwrap();
        assert!(none.is_none());
        assert_eq!(back, t);
        assert_eq!(trace_to_string(&back, None), text);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(parse_trace(""), Err(TraceIoError::Empty)));
        assert!(matches!(parse_trace("{}\n"), Err(TraceIoError::Json { line: 1, .. })));
        let init = Configuration::initial(&TokenPass, Point::ints(0, 0), Point::ints(3, -1));
        let t = run(&TokenPass, RobotModel::Lumi, &gen_rsynch(1, 1, RobotId::B).unwrap(), &init, false).unwrap();
        let text = trace_to_string(&t, None).replace(FORMAT, "other/9");
        assert!(matches!(parse_trace(&text), Err(TraceIoError::Format(_))));
        let text = trace_to_string(&t, None) + "{\"time\": \"1\"}\n";
        assert!(matches!(parse_trace(&text), Err(TraceIoError::Json { .. })));
    }
}
