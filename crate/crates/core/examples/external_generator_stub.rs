//! External-generator mode against a local stand-in service.
//!
//! Starts a small HTTP server that answers `POST /feedback` with a canned
//! reply, then runs one diagram three ways: served normally, with a garbage
//! reply, and with no endpoint at all. The last two fall back to the
//! template text.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;

use diagram_feedback::feedback::{ExternalClient, ExternalConfig, Mode, Pipeline, PipelineConfig};
use diagram_feedback::synthgen::{error_cycle, find_scenario, render_sample, NoiseParams, RenderConfig};

/// Answers every connection with `body`; returns the base URL.
fn serve(body: &'static str) -> anyhow::Result<String> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let url = format!("http://{}", listener.local_addr()?);
    std::thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let mut reader = BufReader::new(stream);
            let mut len = 0usize;
            let mut line = String::new();
            while reader.read_line(&mut line).is_ok_and(|n| n > 0) && line != "\r\n" {
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap_or(0);
                }
                line.clear();
            }
            let mut request = vec![0; len];
            let _ = reader.read_exact(&mut request);
            println!("   stub got {} byte request", request.len());
            let reply = format!(
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = reader.get_mut().write_all(reply.as_bytes());
        }
    });
    Ok(url)
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::new().parse_filters("warn").init();
    let scenario = find_scenario("pushing_block").ok_or_else(|| anyhow::anyhow!("scenario missing"))?;
    let errors = error_cycle(&scenario, 1)?;
    let r = render_sample(&scenario, &errors, &NoiseParams::clean(), 9, &RenderConfig::default())?;

    let good = serve(r#"{"text": "Your drawing leaves out one force. Add it and check the balance."}"#)?;
    let bad = serve("<html>busy</html>")?;
    for (name, endpoint) in [("served", Some(good)), ("garbage reply", Some(bad)), ("no endpoint", None)] {
        let client = ExternalClient::new(ExternalConfig {
            endpoint,
            timeout_secs: 2.0,
            ..ExternalConfig::default()
        });
        let pipeline = Pipeline::new(PipelineConfig::default()).with_external(client);
        let report = pipeline.run_pipeline("pushing_block_01", &r.image, &scenario.key, scenario.key.domain, Mode::External)?;
        println!("== {name}: fallback {}", report.fallback_used);
        println!("{}\n", report.text);
    }
    Ok(())
}
