#include "ckg/manifest.hpp"

#include "ckg/errors.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace ckg {

namespace {

struct DigestDeleter {
    void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("SHA-256 initialisation failed");
    }
    void update(const char* data, std::size_t size) {
        if (EVP_DigestUpdate(ctx_.get(), data, size) != 1) throw std::runtime_error("SHA-256 update failed");
    }
    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), digest.data(), &len) != 1) throw std::runtime_error("SHA-256 final failed");
        std::ostringstream out;
        for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
        return out.str();
    }

private:
    std::unique_ptr<EVP_MD_CTX, DigestDeleter> ctx_;
};

std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '\\')
            out += "\\\\";
        else if (c == '\t')
            out += "\\t";
        else if (c == '\n')
            out += "\\n";
        else
            out += c;
    }
    return out;
}

std::string unescape(std::string_view s, std::size_t line) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out += s[i];
            continue;
        }
        if (++i == s.size()) throw ParseError("dangling escape", line);
        switch (s[i]) {
            case '\\': out += '\\'; break;
            case 't': out += '\t'; break;
            case 'n': out += '\n'; break;
            default: throw ParseError(std::string("unknown escape \\") + s[i], line);
        }
    }
    return out;
}

std::vector<std::string> split_tabs(std::string_view line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        fields.push_back(unescape(line.substr(start, tab == std::string_view::npos ? tab : tab - start), line_no));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
    }
    return fields;
}

constexpr std::string_view kMagic = "CKGMANIFEST 1";

}  // namespace

std::string sha256_hex(std::string_view bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    Sha256 h;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << kMagic << '\n';
    out << "tool_version\t" << escape(m.tool_version) << '\n';
    out << "command\t" << escape(m.command) << '\n';
    for (const auto& a : m.args) out << "arg\t" << escape(a) << '\n';
    if (m.seed) out << "seed\t" << *m.seed << '\n';
    for (const auto& [k, v] : m.config) out << "config\t" << escape(k) << '\t' << escape(v) << '\n';
    for (const auto& f : m.inputs)
        out << "input\t" << escape(f.role) << '\t' << escape(f.path) << '\t' << f.sha256 << '\n';
    for (const auto& f : m.outputs)
        out << "output\t" << escape(f.role) << '\t' << escape(f.path) << '\t' << f.sha256 << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << "duration_seconds\t" << m.duration_seconds << '\n';
    out << "status\t" << escape(m.status) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

RunManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kMagic) throw ParseError("not a run manifest", 1);
    RunManifest m;
    m.tool_version.clear();
    std::size_t line_no = 1;
    auto expect = [&](const std::vector<std::string>& f, std::size_t count) {
        if (f.size() != count)
            throw ParseError("'" + f[0] + "' expects " + std::to_string(count - 1) + " fields", line_no);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_tabs(line, line_no);
        const auto& key = f[0];
        if (key == "tool_version") {
            expect(f, 2);
            m.tool_version = f[1];
        } else if (key == "command") {
            expect(f, 2);
            m.command = f[1];
        } else if (key == "arg") {
            expect(f, 2);
            m.args.push_back(f[1]);
        } else if (key == "seed") {
            expect(f, 2);
            std::uint64_t v = 0;
            const auto [ptr, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), v);
            if (ec != std::errc() || ptr != f[1].data() + f[1].size()) throw ParseError("bad seed", line_no);
            m.seed = v;
        } else if (key == "config") {
            expect(f, 3);
            m.config.emplace_back(f[1], f[2]);
        } else if (key == "input" || key == "output") {
            expect(f, 4);
            (key == "input" ? m.inputs : m.outputs).push_back({f[1], f[2], f[3]});
        } else if (key == "duration_seconds") {
            expect(f, 2);
            m.duration_seconds = std::stod(f[1]);
        } else if (key == "status") {
            expect(f, 2);
            m.status = f[1];
        } else {
            throw ParseError("unknown key '" + key + "'", line_no);
        }
    }
    return m;
}

}  // namespace ckg
