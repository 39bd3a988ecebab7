//! Multi-process runs over the TCP backend.

use std::net::TcpListener;
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

fn free_ports(n: usize) -> Vec<u16> {
    let listeners: Vec<_> = (0..n)
        .map(|_| TcpListener::bind("127.0.0.1:0").unwrap())
        .collect();
    listeners
        .iter()
        .map(|l| l.local_addr().unwrap().port())
        .collect()
}

fn launch(ranks: usize, args: &[&str]) -> Vec<Output> {
    let peers = free_ports(ranks)
        .iter()
        .map(|p| format!("127.0.0.1:{p}"))
        .collect::<Vec<_>>()
        .join(",");
    let children: Vec<_> = (0..ranks)
        .map(|rank| {
            Command::new(env!("CARGO_BIN_EXE_qsim"))
                .args(args)
                .env("QSIM_TRANSPORT", "external")
                .env("QSIM_RANK", rank.to_string())
                .env("QSIM_PEERS", &peers)
                .stdout(Stdio::piped())
                .stderr(Stdio::piped())
                .spawn()
                .unwrap()
        })
        .collect();
    children
        .into_iter()
        .map(|c| c.wait_with_output().unwrap())
        .collect()
}

#[test]
fn four_processes_match_the_simulated_world() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("c.qc");
    std::fs::write(
        &path,
        "qubits 6\nH 5\nCNOT 5 0\nRZ 4 0.3\nH 4\nCRK 4 1 3\nSWAP 5 2\nU1Q 5 0 0 1 0 1 0 0 0\nCNOT 4 5\n",
    )
    .unwrap();
    let circuit = path.to_str().unwrap();

    let outs = launch(4, &["-p", "2", "run", circuit, "--output", "probs"]);
    for (rank, out) in outs.iter().enumerate() {
        assert!(
            out.status.success(),
            "rank {rank}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        if rank > 0 {
            assert!(out.stdout.is_empty(), "only rank 0 writes");
        }
    }
    let simulated = Command::new(env!("CARGO_BIN_EXE_qsim"))
        .args([
            "-p",
            "2",
            "--transport",
            "simulated",
            "run",
            circuit,
            "--output",
            "probs",
        ])
        .output()
        .unwrap();
    assert!(simulated.status.success());
    assert_eq!(outs[0].stdout, simulated.stdout);
}

#[test]
fn world_size_mismatch_is_a_transport_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("c.qc");
    std::fs::write(&path, "qubits 3\nH 2\n").unwrap();
    let outs = launch(2, &["-p", "2", "run", path.to_str().unwrap()]);
    for out in outs {
        assert_eq!(out.status.code(), Some(4));
    }
}

#[test]
fn missing_environment_is_a_transport_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_qsim"))
        .args(["--transport", "external", "ghz", "3"])
        .output()
        .unwrap();
    // Generators never touch the transport.
    assert!(out.status.success());

    let dir = TempDir::new().unwrap();
    let path = dir.path().join("c.qc");
    std::fs::write(&path, "qubits 3\nH 2\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qsim"))
        .args(["--transport", "external", "run", path.to_str().unwrap()])
        .env_remove("QSIM_RANK")
        .env_remove("QSIM_PEERS")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("QSIM_RANK"));
}
