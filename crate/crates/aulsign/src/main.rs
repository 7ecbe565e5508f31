fn main() {
    // Die quietly when output is piped into a closed reader, like other
    // line-oriented tools.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    if let Err(err) = aulsign::cli::run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
