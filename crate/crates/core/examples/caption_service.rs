// Caption clips through an HTTP service. A throwaway local server stands in
// for the real one; the third clip always fails so the retry path shows up.

use std::time::Duration;

use seqtime::dataset_io::{fetch_clip_captions, CaptionServiceConfig, UncaptionedClip};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let server = tiny_http::Server::http("127.0.0.1:0").map_err(|e| e.to_string())?;
    let endpoint = format!("http://{}", server.server_addr().to_ip().expect("tcp listener"));
    let handle = std::thread::spawn(move || {
        // 2 good clips plus 3 attempts for the broken one.
        for mut request in server.incoming_requests().take(5) {
            let mut body = String::new();
            request.as_reader().read_to_string(&mut body).unwrap();
            let req: serde_json::Value = serde_json::from_str(&body).unwrap();
            let id = req["clip_id"].as_str().unwrap_or_default().to_string();
            let response = if id == "c3" {
                tiny_http::Response::from_string("busy").with_status_code(503)
            } else {
                let caption = format!(
                    "Someone is {} in a small room.",
                    req["action_label"].as_str().unwrap_or("moving")
                );
                tiny_http::Response::from_string(serde_json::json!({ "clip_id": id, "caption": caption }).to_string())
            };
            request.respond(response).unwrap();
        }
    });

    let clips: Vec<UncaptionedClip> = [("c1", "juggling"), ("c2", "dancing"), ("c3", "rowing")]
        .into_iter()
        .map(|(id, label)| UncaptionedClip {
            id: id.into(),
            media_ref: format!("clips/{id}.mp4"),
            action_label: label.into(),
            duration_s: 8.0,
            fps: 30.0,
        })
        .collect();
    let mut config = CaptionServiceConfig::new(endpoint);
    config.initial_backoff = Duration::from_millis(10);
    let report = fetch_clip_captions(&config, &clips)?;
    handle.join().expect("server thread");

    for clip in &report.captioned {
        println!("{}: {}", clip.id, clip.caption);
    }
    for failure in &report.failures {
        println!("failed {}: {}", failure.clip_id, failure.error);
    }
    assert_eq!(report.captioned.len(), 2);
    assert_eq!(report.failures.len(), 1);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
