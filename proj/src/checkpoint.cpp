#include "tempshift/checkpoint.hpp"

#include "tempshift/errors.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tempshift {

namespace {

constexpr const char* kMagic = "TEMPSHIFT-CHECKPOINT 1";

static_assert(std::endian::native == std::endian::little,
              "checkpoint float payload assumes a little-endian host");

std::uint64_t parse_count(const std::string& val, const std::filesystem::path& path,
                          const std::string& key) {
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
    if (ec != std::errc{} || end != val.data() + val.size()) {
        throw DataError("checkpoint " + path.string() + ": bad value for '" + key + "': " + val);
    }
    return v;
}

std::string read_line(std::istream& is, const std::filesystem::path& path) {
    std::string line;
    if (!std::getline(is, line)) {
        throw DataError("checkpoint " + path.string() + ": unexpected end of file");
    }
    return line;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const CheckpointMeta& meta) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("checkpoint: cannot open " + path.string() + " for writing");

    os << kMagic << "\n[model]\n" << model.spec().to_kv() << "[meta]\n";
    os << "seed=" << meta.seed << "\n";
    os << "config_hash=" << meta.config_hash << "\n";
    for (const auto& [k, v] : meta.extra) {
        if (k.find('=') != std::string::npos || k.find('\n') != std::string::npos ||
            v.find('\n') != std::string::npos) {
            throw DataError("checkpoint: metadata entry '" + k + "' cannot be stored as key=value");
        }
        os << "extra." << k << "=" << v << "\n";
    }
    os << "parameters=" << model.parameters().size() << "\n\n";
    for (const auto& p : model.parameters()) {
        const auto& s = p.value.shape();
        os << "param " << p.name << " " << s.n << " " << s.c << " " << s.d << " " << s.h << " "
           << s.w << "\n";
        os.write(reinterpret_cast<const char*>(p.value.ptr()),
                 static_cast<std::streamsize>(p.value.size() * sizeof(float)));
        os << "\n";
    }
    os << "end\n";
    if (!os) throw DataError("checkpoint: write to " + path.string() + " failed");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 const std::optional<ModelSpec>& expected) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("checkpoint: cannot open " + path.string());

    if (read_line(is, path) != kMagic) {
        throw DataError("checkpoint " + path.string() + ": not a tempshift checkpoint");
    }
    if (read_line(is, path) != "[model]") {
        throw DataError("checkpoint " + path.string() + ": missing [model] section");
    }
    std::string spec_text;
    std::string line;
    while ((line = read_line(is, path)) != "[meta]") spec_text += line + "\n";

    LoadedCheckpoint out;
    std::size_t n_params = 0;
    bool have_count = false;
    while (!(line = read_line(is, path)).empty()) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError("checkpoint " + path.string() + ": malformed meta line '" + line + "'");
        }
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "seed") out.meta.seed = parse_count(val, path, key);
        else if (key == "config_hash") out.meta.config_hash = val;
        else if (key == "parameters") {
            n_params = parse_count(val, path, key);
            have_count = true;
        } else if (key.rfind("extra.", 0) == 0) out.meta.extra[key.substr(6)] = val;
        else throw DataError("checkpoint " + path.string() + ": unknown meta key '" + key + "'");
    }
    if (!have_count) throw DataError("checkpoint " + path.string() + ": missing parameter count");

    const ModelSpec spec = ModelSpec::from_kv(spec_text);
    if (expected && !(*expected == spec)) {
        throw DataError("checkpoint " + path.string() + ": stored model spec\n" + spec.to_kv() +
                        "does not match expected spec\n" + expected->to_kv());
    }
    out.model = build_model(spec);
    auto& params = out.model->parameters();
    if (n_params != params.size()) {
        throw DataError("checkpoint " + path.string() + ": holds " + std::to_string(n_params) +
                        " parameters, model has " + std::to_string(params.size()));
    }
    for (auto& p : params) {
        std::istringstream header(read_line(is, path));
        std::string tag;
        std::string name;
        nn::Shape s;
        header >> tag >> name >> s.n >> s.c >> s.d >> s.h >> s.w;
        if (tag != "param" || !header) {
            throw DataError("checkpoint " + path.string() + ": malformed parameter header");
        }
        if (name != p.name || !(s == p.value.shape())) {
            throw DataError("checkpoint " + path.string() + ": parameter '" + name + "' " +
                            s.str() + " does not match model parameter '" + p.name + "' " +
                            p.value.shape().str());
        }
        is.read(reinterpret_cast<char*>(p.value.ptr()),
                static_cast<std::streamsize>(p.value.size() * sizeof(float)));
        if (!is || is.get() != '\n') {
            throw DataError("checkpoint " + path.string() + ": truncated data for '" + name + "'");
        }
    }
    if (read_line(is, path) != "end") {
        throw DataError("checkpoint " + path.string() + ": missing end marker");
    }
    return out;
}

} // namespace tempshift
