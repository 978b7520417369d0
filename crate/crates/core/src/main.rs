fn main() {
    std::process::exit(topicgrid::cli::run());
}
