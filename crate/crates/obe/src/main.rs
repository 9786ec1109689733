fn main() {
    // Die quietly when a downstream pipe closes (`obe help | head`),
    // like any other command-line filter.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    std::process::exit(obe::cli::main_entry(&args));
}
