// Writes a synthetic session (EMG, audio, calibration, landmarks, manifest) for demos.
#include "vocalis/synth.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace vocalis;
    CLI::App cli{"Generate a synthetic singing session", "synth_session"};
    synth::SessionSpec spec;
    std::string dir, skill = "professional";
    std::optional<std::string> phase;
    cli.add_option("dir", dir, "Output directory")->required();
    cli.add_option("--participant", spec.participant_id);
    cli.add_option("--session", spec.session_id);
    cli.add_option("--skill", skill, "novice | experienced | professional");
    cli.add_option("--low", spec.low, "Lowest pitch (SPN)");
    cli.add_option("--high", spec.high, "Highest pitch (SPN)");
    cli.add_option("--hold", spec.hold_s, "Seconds per pitch");
    cli.add_option("--activation", spec.activation);
    cli.add_option("--shift", spec.post_shift, "Added to activation");
    cli.add_option("--seed", spec.seed);
    cli.add_option("--phase", phase, "pre | post");
    bool no_audio = false, no_landmarks = false, no_calibration = false;
    cli.add_flag("--no-audio", no_audio);
    cli.add_flag("--no-landmarks", no_landmarks);
    cli.add_flag("--no-calibration", no_calibration);
    CLI11_PARSE(cli, argc, argv);
    spec.with_audio = !no_audio;
    spec.with_landmarks = !no_landmarks;
    spec.with_calibration = !no_calibration;
    try {
        if (skill == "novice") spec.skill = io::SkillLevel::novice;
        else if (skill == "experienced") spec.skill = io::SkillLevel::experienced;
        else if (skill == "professional") spec.skill = io::SkillLevel::professional;
        else fail(ErrorKind::invalid_argument, "unknown skill level '" + skill + "'");
        auto s = synth::make_session(spec);
        s.manifest.phase = phase;
        const auto path = synth::write_session(s, dir);
        std::cout << nlohmann::json{{"manifest", path.string()}, {"pitches", s.manifest.pitch_events.size()}}.dump()
                  << '\n';
    } catch (const Error& e) {
        std::cerr << nlohmann::json{{"level", "error"}, {"message", e.what()}}.dump() << '\n';
        return e.is_input_error() ? 1 : 2;
    }
    return 0;
}
