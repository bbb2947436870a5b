#include "ots/io.hpp"

#include "ots/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ots {

static_assert(std::endian::native == std::endian::little, "container code assumes a little-endian host");

std::string format_double(double v)
{
    std::array<char, 64> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), r.ptr);
}

namespace {

double parse_double(const std::string& s)
{
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw Error(ErrorCode::Format, "cannot parse number '" + s + "'");
    return v;
}

long parse_int(const std::string& s)
{
    long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw Error(ErrorCode::Format, "cannot parse integer '" + s + "'");
    return v;
}

std::ifstream open_in(const fs::path& path, bool binary = false)
{
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return in;
}

std::ofstream open_out(const fs::path& path, bool binary = false)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    return out;
}

// "key value..." header line.
std::vector<std::string> header_line(std::istream& in, const std::string& key, std::size_t values)
{
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::Format, "missing '" + key + "' line");
    std::istringstream ss(line);
    std::string k;
    ss >> k;
    if (k != key) throw Error(ErrorCode::Format, "expected '" + key + "', found '" + k + "'");
    std::vector<std::string> out(values);
    for (auto& v : out)
        if (!(ss >> v)) throw Error(ErrorCode::Format, "'" + key + "' line is incomplete");
    return out;
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    return out;
}

std::vector<std::vector<double>> read_csv(const fs::path& path, const std::vector<std::string>& header)
{
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || split_csv(line) != header)
        throw Error(ErrorCode::Format, path.string() + ": unexpected CSV header");
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) throw Error(ErrorCode::Format, path.string() + ": wrong column count");
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse_double(c));
        rows.push_back(std::move(row));
    }
    return rows;
}

class ByteWriter {
public:
    template <typename T>
    void put(T v)
    {
        static_assert(std::is_trivially_copyable_v<T>);
        const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(T));
    }
    void u32(std::size_t v)
    {
        if (v > 0xffffffffu) throw Error(ErrorCode::TooLarge, "value does not fit the container format");
        put(static_cast<std::uint32_t>(v));
    }
    void f64(double v) { put(v); }
    void str(const std::string& s)
    {
        u32(s.size());
        bytes.insert(bytes.end(), s.begin(), s.end());
    }
    void matrix(const Eigen::MatrixXd& m)
    {
        u32(static_cast<std::size_t>(m.rows()));
        u32(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            for (Eigen::Index r = 0; r < m.rows(); ++r) f64(m(r, c));
    }
    void vector(const Eigen::VectorXd& v)
    {
        u32(static_cast<std::size_t>(v.size()));
        for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
    }
    void perm(const Permutation& p)
    {
        u32(p.size());
        for (int v : p) u32(static_cast<std::size_t>(v));
    }
    void section(const char (&tag)[5], const ByteWriter& body)
    {
        bytes.insert(bytes.end(), tag, tag + 4);
        put(static_cast<std::uint64_t>(body.bytes.size()));
        bytes.insert(bytes.end(), body.bytes.begin(), body.bytes.end());
    }

    std::vector<std::uint8_t> bytes;
};

class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t size) : p_(data), end_(data + size) {}

    template <typename T>
    T get()
    {
        need(sizeof(T));
        T v;
        std::memcpy(&v, p_, sizeof(T));
        p_ += sizeof(T);
        return v;
    }
    std::size_t u32() { return get<std::uint32_t>(); }
    double f64() { return get<double>(); }
    std::string str()
    {
        const std::size_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(p_), n);
        p_ += n;
        return s;
    }
    Eigen::MatrixXd matrix()
    {
        const std::size_t rows = u32();
        const std::size_t cols = u32();
        need(rows * cols * sizeof(double));
        Eigen::MatrixXd m(rows, cols);
        for (std::size_t c = 0; c < cols; ++c)
            for (std::size_t r = 0; r < rows; ++r) m(r, c) = f64();
        return m;
    }
    Eigen::VectorXd vector()
    {
        const std::size_t n = u32();
        need(n * sizeof(double));
        Eigen::VectorXd v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = f64();
        return v;
    }
    Permutation perm()
    {
        const std::size_t n = u32();
        need(n * 4);
        Permutation p(n);
        for (auto& v : p) v = static_cast<int>(u32());
        if (!is_permutation_of_range(p)) throw Error(ErrorCode::Format, "stored ordering is not a permutation");
        return p;
    }
    std::pair<std::string, ByteReader> section()
    {
        need(12);
        std::string tag(reinterpret_cast<const char*>(p_), 4);
        p_ += 4;
        const auto len = get<std::uint64_t>();
        need(len);
        ByteReader body(p_, len);
        p_ += len;
        return {tag, body};
    }
    bool done() const { return p_ == end_; }

private:
    void need(std::size_t n) const
    {
        if (static_cast<std::size_t>(end_ - p_) < n) throw Error(ErrorCode::Format, "model file is truncated");
    }

    const std::uint8_t* p_;
    const std::uint8_t* end_;
};

void write_regressor(ByteWriter& w, const PolyRegressor& r)
{
    w.u32(static_cast<std::size_t>(r.degree()));
    w.vector(r.lower());
    w.vector(r.upper());
    w.u32(static_cast<std::size_t>(r.outputs()));
    for (const auto& out : r.terms()) {
        w.u32(out.size());
        for (const auto& t : out) w.matrix(t.factors);
    }
    w.put<std::uint8_t>(r.ill_conditioned);
    w.put<std::uint8_t>(r.degree_reduced);
}

PolyRegressor read_regressor(ByteReader& r)
{
    const int degree = static_cast<int>(r.u32());
    Eigen::VectorXd lower = r.vector();
    Eigen::VectorXd upper = r.vector();
    std::vector<std::vector<PolyRegressor::Term>> terms(r.u32());
    for (auto& out : terms) {
        out.resize(r.u32());
        for (auto& t : out) t.factors = r.matrix();
    }
    PolyRegressor model(degree, std::move(lower), std::move(upper), std::move(terms));
    model.ill_conditioned = r.get<std::uint8_t>() != 0;
    model.degree_reduced = r.get<std::uint8_t>() != 0;
    return model;
}

void write_centers(ByteWriter& w, const ParticleCloud& c)
{
    w.f64(c.sigma());
    w.matrix(c.centers());
}

ParticleCloud read_centers(ByteReader& r)
{
    const double sigma = r.f64();
    Eigen::MatrixXd m = r.matrix();
    if (m.cols() != 2) throw Error(ErrorCode::Format, "particle centers must have two columns");
    return ParticleCloud(Centers(m), sigma);
}

}  // namespace

void write_cloud(std::ostream& out, const ParticleCloud& cloud)
{
    out << "n " << cloud.size() << '\n' << "sigma " << format_double(cloud.sigma()) << '\n';
    for (int n = 0; n < cloud.size(); ++n)
        out << format_double(cloud.centers()(n, 0)) << ' ' << format_double(cloud.centers()(n, 1)) << '\n';
}

ParticleCloud read_cloud(std::istream& in)
{
    const long n = parse_int(header_line(in, "n", 1)[0]);
    const double sigma = parse_double(header_line(in, "sigma", 1)[0]);
    if (n < 1) throw Error(ErrorCode::Format, "cloud must have at least one particle");
    Centers c(n, 2);
    for (long i = 0; i < n; ++i) {
        std::string x, y;
        if (!(in >> x >> y)) throw Error(ErrorCode::Format, "cloud file has fewer rows than declared");
        c(i, 0) = parse_double(x);
        c(i, 1) = parse_double(y);
    }
    return ParticleCloud(std::move(c), sigma);
}

void save_cloud(const fs::path& path, const ParticleCloud& cloud)
{
    auto out = open_out(path);
    write_cloud(out, cloud);
}

ParticleCloud load_cloud(const fs::path& path)
{
    auto in = open_in(path);
    return read_cloud(in);
}

void write_raster(std::ostream& out, const FieldSample& field)
{
    const Grid& g = field.grid;
    const bool masked = g.masked_count() != g.size();
    out << "OTR 1\n"
        << "nx " << g.nx() << '\n'
        << "ny " << g.ny() << '\n'
        << "origin " << format_double(g.origin().x()) << ' ' << format_double(g.origin().y()) << '\n'
        << "spacing " << format_double(g.spacing().x()) << ' ' << format_double(g.spacing().y()) << '\n'
        << "mask " << (masked ? 1 : 0) << '\n'
        << "end\n";
    out.write(reinterpret_cast<const char*>(field.values.data()),
              static_cast<std::streamsize>(field.values.size() * sizeof(double)));
    if (masked)
        out.write(reinterpret_cast<const char*>(g.mask().data()), static_cast<std::streamsize>(g.mask().size()));
    if (!out) throw Error(ErrorCode::Io, "raster write failed");
}

FieldSample read_raster(std::istream& in)
{
    const auto magic = header_line(in, "OTR", 1);
    if (magic[0] != "1") throw Error(ErrorCode::Format, "unsupported raster version " + magic[0]);
    const long nx = parse_int(header_line(in, "nx", 1)[0]);
    const long ny = parse_int(header_line(in, "ny", 1)[0]);
    const auto o = header_line(in, "origin", 2);
    const auto h = header_line(in, "spacing", 2);
    const long masked = parse_int(header_line(in, "mask", 1)[0]);
    header_line(in, "end", 0);
    if (nx < 1 || ny < 1 || nx * ny > (1L << 28)) throw Error(ErrorCode::Format, "raster size out of range");
    const std::size_t count = static_cast<std::size_t>(nx * ny);
    std::vector<double> values(count);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw Error(ErrorCode::Format, "raster payload is truncated");
    std::vector<std::uint8_t> mask(count, 1);
    if (masked) {
        in.read(reinterpret_cast<char*>(mask.data()), static_cast<std::streamsize>(count));
        if (!in) throw Error(ErrorCode::Format, "raster mask is truncated");
    }
    Grid g(Vec2(parse_double(o[0]), parse_double(o[1])), Vec2(parse_double(h[0]), parse_double(h[1])),
           static_cast<int>(nx), static_cast<int>(ny), std::move(mask));
    return FieldSample(std::move(g), std::move(values));
}

void save_raster(const fs::path& path, const FieldSample& field)
{
    auto out = open_out(path, true);
    write_raster(out, field);
}

FieldSample load_raster(const fs::path& path)
{
    auto in = open_in(path, true);
    return read_raster(in);
}

void save_polygon(const fs::path& path, const Polygon& poly)
{
    auto out = open_out(path);
    out << "x,y\n";
    for (const auto& v : poly.vertices) out << format_double(v.x()) << ',' << format_double(v.y()) << '\n';
}

Polygon load_polygon(const fs::path& path)
{
    Polygon poly;
    for (const auto& row : read_csv(path, {"x", "y"})) poly.vertices.emplace_back(row[0], row[1]);
    return poly;
}

void save_doe(const fs::path& path, const Eigen::MatrixX2d& samples)
{
    auto out = open_out(path);
    out << "theta,lambda\n";
    for (Eigen::Index p = 0; p < samples.rows(); ++p)
        out << format_double(samples(p, 0)) << ',' << format_double(samples(p, 1)) << '\n';
}

Eigen::MatrixX2d load_doe(const fs::path& path)
{
    const auto rows = read_csv(path, {"theta", "lambda"});
    Eigen::MatrixX2d out(static_cast<Eigen::Index>(rows.size()), 2);
    for (std::size_t p = 0; p < rows.size(); ++p) {
        out(static_cast<Eigen::Index>(p), 0) = rows[p][0];
        out(static_cast<Eigen::Index>(p), 1) = rows[p][1];
    }
    return out;
}

std::vector<std::uint8_t> serialize_model(const ModelContainer& m, const std::string& config_json)
{
    ByteWriter file;
    const char magic[4] = {'O', 'T', 'S', 'M'};
    file.bytes.insert(file.bytes.end(), magic, magic + 4);
    file.put<std::uint16_t>(kContainerVersion);

    ByteWriter conf;
    conf.str(config_json);
    file.section("CONF", conf);

    ByteWriter sets;
    const auto& s = m.settings;
    sets.u32(static_cast<std::size_t>(s.n_s));
    sets.f64(s.sigma_s);
    sets.u32(static_cast<std::size_t>(s.n_g));
    sets.f64(s.sigma_g);
    sets.f64(s.energy_threshold);
    sets.u32(static_cast<std::size_t>(s.poly.max_degree));
    sets.f64(m.steepness);
    file.section("SETS", sets);

    ByteWriter grid;
    grid.f64(m.box.origin().x());
    grid.f64(m.box.origin().y());
    grid.f64(m.box.spacing().x());
    grid.f64(m.box.spacing().y());
    grid.u32(static_cast<std::size_t>(m.box.nx()));
    grid.u32(static_cast<std::size_t>(m.box.ny()));
    file.section("GRID", grid);

    ByteWriter sgm;
    sgm.u32(static_cast<std::size_t>(m.sgm.size()));
    sgm.f64(m.sgm.steepness);
    sgm.f64(m.sgm.total_cost);
    for (int k = 0; k < m.sgm.size(); ++k) {
        const auto& poly = m.sgm.polygons[k];
        sgm.u32(poly.size());
        for (const auto& v : poly.vertices) {
            sgm.f64(v.x());
            sgm.f64(v.y());
        }
        sgm.f64(m.sgm.integrals[k]);
        write_centers(sgm, m.sgm.clouds[k]);
    }
    sgm.u32(m.sgm.orderings.size());
    for (const auto& p : m.sgm.orderings) sgm.perm(p);
    file.section("SGM_", sgm);

    for (const auto& ssm : m.ssms) {
        ByteWriter w;
        w.u32(static_cast<std::size_t>(ssm.n_s));
        w.f64(ssm.sigma_s);
        w.matrix(ssm.pod.modes);
        w.vector(ssm.pod.singular_values);
        w.f64(ssm.pod.energy_threshold);
        w.put<std::uint8_t>(ssm.pod.rank_deficient);
        w.matrix(ssm.params);
        write_regressor(w, ssm.regressor);
        write_regressor(w, ssm.integral_model);
        file.section("SSM_", w);
    }

    ByteWriter ord;
    ord.u32(m.orderings.size());
    for (const auto& p : m.orderings) ord.perm(p);
    file.section("ORDR", ord);

    ByteWriter prov;
    prov.str(m.version);
    prov.put<std::uint64_t>(s.seed);
    file.section("PROV", prov);
    return file.bytes;
}

ModelContainer deserialize_model(const std::vector<std::uint8_t>& bytes, std::string* config_json)
{
    if (bytes.size() < 6 || std::memcmp(bytes.data(), "OTSM", 4) != 0)
        throw Error(ErrorCode::Format, "not a model container (bad magic)");
    ByteReader file(bytes.data() + 4, bytes.size() - 4);
    const auto version = file.get<std::uint16_t>();
    if (version != kContainerVersion)
        throw Error(ErrorCode::Format, "unsupported container version " + std::to_string(version));

    ModelContainer m;
    bool seen_grid = false, seen_sgm = false;
    while (!file.done()) {
        auto [tag, r] = file.section();
        if (tag == "CONF") {
            std::string json = r.str();
            if (config_json) *config_json = std::move(json);
        } else if (tag == "SETS") {
            m.settings.n_s = static_cast<int>(r.u32());
            m.settings.sigma_s = r.f64();
            m.settings.n_g = static_cast<int>(r.u32());
            m.settings.sigma_g = r.f64();
            m.settings.energy_threshold = r.f64();
            m.settings.poly.max_degree = static_cast<int>(r.u32());
            m.steepness = r.f64();
        } else if (tag == "GRID") {
            const double ox = r.f64(), oy = r.f64(), hx = r.f64(), hy = r.f64();
            const int nx = static_cast<int>(r.u32()), ny = static_cast<int>(r.u32());
            m.box = Grid(Vec2(ox, oy), Vec2(hx, hy), nx, ny);
            seen_grid = true;
        } else if (tag == "SGM_") {
            const std::size_t k = r.u32();
            m.sgm.steepness = r.f64();
            m.sgm.total_cost = r.f64();
            for (std::size_t g = 0; g < k; ++g) {
                Polygon poly;
                const std::size_t v = r.u32();
                for (std::size_t i = 0; i < v; ++i) {
                    const double x = r.f64();
                    poly.vertices.emplace_back(x, r.f64());
                }
                m.sgm.polygons.push_back(std::move(poly));
                m.sgm.integrals.push_back(r.f64());
                m.sgm.clouds.push_back(read_centers(r));
            }
            m.sgm.orderings.resize(r.u32());
            for (auto& p : m.sgm.orderings) p = r.perm();
            seen_sgm = true;
        } else if (tag == "SSM_") {
            SSM ssm;
            ssm.n_s = static_cast<int>(r.u32());
            ssm.sigma_s = r.f64();
            ssm.pod.modes = r.matrix();
            ssm.pod.singular_values = r.vector();
            ssm.pod.energy_threshold = r.f64();
            ssm.pod.rank_deficient = r.get<std::uint8_t>() != 0;
            ssm.params = r.matrix();
            ssm.regressor = read_regressor(r);
            ssm.integral_model = read_regressor(r);
            if (ssm.pod.modes.rows() != 2 * ssm.n_s || ssm.regressor.outputs() != ssm.pod.rank())
                throw Error(ErrorCode::Format, "SSM dimensions are inconsistent");
            m.ssms.push_back(std::move(ssm));
        } else if (tag == "ORDR") {
            m.orderings.resize(r.u32());
            for (auto& p : m.orderings) p = r.perm();
        } else if (tag == "PROV") {
            m.version = r.str();
            m.settings.seed = r.get<std::uint64_t>();
        }
        // Unknown sections are skipped for forward compatibility.
    }
    if (!seen_grid || !seen_sgm || m.ssms.empty()) throw Error(ErrorCode::Format, "model container is incomplete");
    if (m.ssms.size() != m.sgm.polygons.size())
        throw Error(ErrorCode::Format, "model holds a different number of SSMs and geometries");
    return m;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path)
{
    auto in = open_in(path, true);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes)
{
    auto out = open_out(path, true);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void save_model(const fs::path& path, const ModelContainer& model, const std::string& config_json)
{
    write_bytes(path, serialize_model(model, config_json));
}

ModelContainer load_model(const fs::path& path, std::string* config_json)
{
    return deserialize_model(read_bytes(path), config_json);
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes)
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::Io, "SHA-256 computation failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

std::string sha256_file(const fs::path& path)
{
    return sha256_hex(read_bytes(path));
}

}  // namespace ots
