#pragma once
#include "hoin/trainer.hpp"

#include <stdexcept>
#include <string>

namespace hoin {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A full run description: the TaskSpec plus data sources and output sinks.
// Sections: [model] [encoder] [task] [train] [output]; `#` starts a comment;
// unknown keys are rejected with key + line number.
struct RunConfig {
    TaskSpec task;
    std::string image_path;  // [task] image: measurement source (truth before operator)
    std::string truth_path;  // [task] truth: ground-truth override for metrics
    std::string phantom;     // [task] phantom: disk|squares|shepp-like ('' = none)
    int size = 64;           // phantom/scene side when no image is given
    std::string out_dir = "out";
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
// writes every effective value; parse(serialize(c)) == c
std::string serialize_config(const RunConfig& cfg);

const char* to_string(TaskKind k);
const char* to_string(BlockKind k);
const char* to_string(Act a);
const char* to_string(EncKind k);

} // namespace hoin
