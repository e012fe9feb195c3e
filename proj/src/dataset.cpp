#include "fse/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "fse/errors.hpp"
#include "json.hpp"

namespace fse {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<Component> ObjectRecord::pick(const std::vector<std::string>& ids) const {
    std::vector<Component> out;
    for (const std::string& id : ids) {
        auto it = std::find_if(components.begin(), components.end(),
                               [&](const Component& c) { return c.id == id; });
        if (it == components.end())
            throw DataError("object " + this->id + ": unknown component id " + id);
        out.push_back(*it);
    }
    return out;
}

std::vector<const ObjectRecord*> Dataset::train_objects() const {
    std::vector<const ObjectRecord*> out;
    for (const auto& o : objects)
        if (!o.test) out.push_back(&o);
    return out;
}

std::vector<const ObjectRecord*> Dataset::test_objects() const {
    std::vector<const ObjectRecord*> out;
    for (const auto& o : objects)
        if (o.test) out.push_back(&o);
    return out;
}

namespace {

double uni(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool coin(std::mt19937_64& rng, double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

Component box_component(const std::string& id, const std::string& label,
                        const Eigen::Vector3d& center, const Eigen::Vector3d& half) {
    return Component{id, label, make_box(center, half)};
}

// Tables: top slab on four legs, optional apron slab under the top and an
// optional stretcher joining the two back legs.
std::vector<Component> make_table(std::mt19937_64& rng) {
    std::vector<Component> parts;
    const double leg_h = uni(rng, 0.6, 1.0);
    const double leg_w = uni(rng, 0.035, 0.06);
    const double top_hx = uni(rng, 0.5, 0.9);
    const double top_hz = uni(rng, 0.35, 0.65);
    const double top_hy = uni(rng, 0.03, 0.06);
    const double inset = uni(rng, 0.01, 0.04);
    const double lx = top_hx - leg_w - inset;
    const double lz = top_hz - leg_w - inset;

    parts.push_back(box_component("top", "top", {0, leg_h + top_hy, 0}, {top_hx, top_hy, top_hz}));
    int li = 0;
    for (double sx : {-1.0, 1.0}) {
        for (double sz : {-1.0, 1.0}) {
            parts.push_back(box_component("leg" + std::to_string(li++), "leg",
                                          {sx * lx, leg_h / 2, sz * lz},
                                          {leg_w, leg_h / 2, leg_w}));
        }
    }
    if (coin(rng, 0.5)) {
        const double hy = uni(rng, 0.02, 0.04);
        parts.push_back(box_component("apron", "apron", {0, leg_h - hy, 0}, {lx, hy, lz}));
    }
    if (coin(rng, 0.5)) {
        const double y = leg_h * uni(rng, 0.12, 0.3);
        parts.push_back(box_component("stretcher", "stretcher", {0, y, -lz},
                                      {lx, uni(rng, 0.02, 0.035), leg_w * 0.9}));
    }
    return parts;
}

// Chairs: seat, leg set, back panel, armrest pair. The four legs form one
// component (likewise the two arms) so every chair contributes one part per
// semantic label, keeping the label distribution of the single-part
// evaluation pool balanced.
std::vector<Component> make_chair(std::mt19937_64& rng) {
    std::vector<Component> parts;
    const double leg_h = uni(rng, 0.4, 0.6);
    const double leg_w = uni(rng, 0.03, 0.05);
    const double seat_hx = uni(rng, 0.35, 0.5);
    const double seat_hz = uni(rng, 0.35, 0.5);
    const double seat_hy = uni(rng, 0.04, 0.07);
    const double lx = seat_hx - leg_w - 0.02;
    const double lz = seat_hz - leg_w - 0.02;
    const double seat_top = leg_h + 2 * seat_hy;

    parts.push_back(
        box_component("seat", "seat", {0, leg_h + seat_hy, 0}, {seat_hx, seat_hy, seat_hz}));

    TriMesh legs;
    for (double sx : {-1.0, 1.0})
        for (double sz : {-1.0, 1.0})
            legs.append(make_box({sx * lx, leg_h / 2, sz * lz}, {leg_w, leg_h / 2, leg_w}));
    parts.push_back(Component{"legs", "legs", std::move(legs)});

    const double back_h = uni(rng, 0.5, 0.8);
    const double back_hz = uni(rng, 0.025, 0.045);
    parts.push_back(box_component("back", "back", {0, seat_top + back_h / 2, -(seat_hz - back_hz)},
                                  {seat_hx, back_h / 2, back_hz}));

    const double arm_h = uni(rng, 0.15, 0.25);
    const double arm_hw = uni(rng, 0.025, 0.04);
    TriMesh arms;
    for (double sx : {-1.0, 1.0})
        arms.append(make_box({sx * (seat_hx - arm_hw), seat_top + arm_h / 2, 0},
                             {arm_hw, arm_h / 2, seat_hz * 0.7}));
    parts.push_back(Component{"arms", "arms", std::move(arms)});
    return parts;
}

// Lamps: base slab, pole, shade, optional mid-pole arm.
std::vector<Component> make_lamp(std::mt19937_64& rng) {
    std::vector<Component> parts;
    const double base_h = uni(rng, 0.02, 0.04);
    const double base_r = uni(rng, 0.2, 0.35);
    const double pole_h = uni(rng, 1.0, 1.5);
    const double pole_w = uni(rng, 0.02, 0.04);
    const double shade_r = uni(rng, 0.15, 0.3);
    const double shade_h = uni(rng, 0.1, 0.2);

    parts.push_back(box_component("base", "base", {0, base_h, 0}, {base_r, base_h, base_r}));
    parts.push_back(box_component("pole", "pole", {0, 2 * base_h + pole_h / 2, 0},
                                  {pole_w, pole_h / 2, pole_w}));
    parts.push_back(box_component("shade", "shade",
                                  {0, 2 * base_h + pole_h + shade_h, 0},
                                  {shade_r, shade_h, shade_r}));
    if (coin(rng, 0.4)) {
        const double arm_y = 2 * base_h + pole_h * uni(rng, 0.4, 0.7);
        const double arm_len = uni(rng, 0.12, 0.25);
        parts.push_back(box_component("arm", "arm", {pole_w + arm_len / 2, arm_y, 0},
                                      {arm_len / 2, pole_w, pole_w}));
    }
    return parts;
}

void normalize_to_unit_radius(std::vector<Component>& parts) {
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    std::size_t count = 0;
    for (const Component& c : parts) {
        centroid += c.mesh.vertices.colwise().sum().transpose();
        count += static_cast<std::size_t>(c.mesh.vertices.rows());
    }
    centroid /= static_cast<double>(count);
    double radius = 0.0;
    for (const Component& c : parts) {
        for (Eigen::Index r = 0; r < c.mesh.vertices.rows(); ++r) {
            radius = std::max(radius,
                              (c.mesh.vertices.row(r).transpose() - centroid).norm());
        }
    }
    for (Component& c : parts) {
        c.mesh.vertices.rowwise() -= centroid.transpose();
        c.mesh.vertices /= radius;
    }
}

}  // namespace

Dataset generate_synthetic_dataset(const GenConfig& config) {
    if (config.count <= 0) throw DataError("generate_synthetic_dataset: object count must be > 0");
    if (config.category != "table" && config.category != "chair" && config.category != "lamp")
        throw DataError("generate_synthetic_dataset: unknown category " + config.category);

    Dataset ds;
    ds.category = config.category;
    ds.seed = config.seed;
    ds.tau = config.tau;

    const int train_count = (config.count * 4) / 5;
    for (int i = 0; i < config.count; ++i) {
        ObjectRecord obj;
        char buf[16];
        std::snprintf(buf, sizeof buf, "obj_%03d", i);
        obj.id = buf;
        obj.test = (i >= train_count);

        bool ok = false;
        for (int attempt = 0; attempt < 8 && !ok; ++attempt) {
            std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(i) * 64 +
                                                             static_cast<std::uint64_t>(attempt)));
            std::vector<Component> parts;
            if (config.category == "table") parts = make_table(rng);
            else if (config.category == "chair") parts = make_chair(rng);
            else parts = make_lamp(rng);
            normalize_to_unit_radius(parts);
            ContactGraph g = build_contact_graph_unchecked(parts, config.tau);
            if (g.connected_pieces(g.nodes).size() == 1) {
                obj.components = std::move(parts);
                obj.graph = std::move(g);
                ok = true;
            }
        }
        if (!ok)
            throw DataError("generate_synthetic_dataset: object " + obj.id +
                            " has a disconnected contact graph after retries");
        ds.objects.push_back(std::move(obj));
    }
    return ds;
}

namespace {

constexpr char kMeshMagic[4] = {'F', 'S', 'E', 'C'};

template <typename T>
void write_pod(std::ostream& os, T v) {
    unsigned char b[sizeof(T)];
    std::uint64_t u = 0;
    std::memcpy(&u, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i)
        b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    unsigned char b[sizeof(T)];
    is.read(reinterpret_cast<char*>(b), sizeof(T));
    if (!is) throw DataError("mesh file: truncated");
    std::uint64_t u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    T v;
    std::memcpy(&v, &u, sizeof(T));
    return v;
}

void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_pod<std::uint64_t>(os, bits);
}

double read_f64(std::istream& is) {
    const std::uint64_t bits = read_pod<std::uint64_t>(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void save_component(const Component& c, const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path.string());
    os.write(kMeshMagic, 4);
    write_pod<std::uint32_t>(os, 1);  // version
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(c.id.size()));
    os.write(c.id.data(), static_cast<std::streamsize>(c.id.size()));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(c.label.size()));
    os.write(c.label.data(), static_cast<std::streamsize>(c.label.size()));
    write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(c.mesh.vertices.rows()));
    write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(c.mesh.triangles.rows()));
    for (Eigen::Index r = 0; r < c.mesh.vertices.rows(); ++r)
        for (int j = 0; j < 3; ++j) write_f64(os, c.mesh.vertices(r, j));
    for (Eigen::Index t = 0; t < c.mesh.triangles.rows(); ++t)
        for (int j = 0; j < 3; ++j)
            write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(c.mesh.triangles(t, j)));
}

Component load_component(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot read " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMeshMagic, 4) != 0)
        throw DataError("bad mesh magic in " + path.string());
    const auto version = read_pod<std::uint32_t>(is);
    if (version != 1) throw DataError("unsupported mesh version in " + path.string());
    Component c;
    const auto id_len = read_pod<std::uint32_t>(is);
    c.id.resize(id_len);
    is.read(c.id.data(), id_len);
    const auto label_len = read_pod<std::uint32_t>(is);
    c.label.resize(label_len);
    is.read(c.label.data(), label_len);
    const auto nv = read_pod<std::uint64_t>(is);
    const auto nt = read_pod<std::uint64_t>(is);
    c.mesh.vertices.resize(static_cast<Eigen::Index>(nv), 3);
    c.mesh.triangles.resize(static_cast<Eigen::Index>(nt), 3);
    for (Eigen::Index r = 0; r < c.mesh.vertices.rows(); ++r)
        for (int j = 0; j < 3; ++j) c.mesh.vertices(r, j) = read_f64(is);
    for (Eigen::Index t = 0; t < c.mesh.triangles.rows(); ++t)
        for (int j = 0; j < 3; ++j)
            c.mesh.triangles(t, j) = static_cast<int>(read_pod<std::uint32_t>(is));
    if (!is) throw DataError("truncated mesh file " + path.string());
    return c;
}

double assembly_radius(const std::vector<Component>& parts) {
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    std::size_t count = 0;
    for (const Component& c : parts) {
        centroid += c.mesh.vertices.colwise().sum().transpose();
        count += static_cast<std::size_t>(c.mesh.vertices.rows());
    }
    centroid /= static_cast<double>(count);
    double radius = 0.0;
    for (const Component& c : parts)
        for (Eigen::Index r = 0; r < c.mesh.vertices.rows(); ++r)
            radius = std::max(radius, (c.mesh.vertices.row(r).transpose() - centroid).norm());
    return radius;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "objects");

    json root;
    root["version"] = 1;
    root["category"] = dataset.category;
    root["seed"] = dataset.seed;
    root["tau"] = dataset.tau;
    root["objects"] = json::array();
    for (const auto& obj : dataset.objects) {
        root["objects"].push_back({{"id", obj.id}, {"split", obj.test ? "test" : "train"}});
    }
    std::ofstream(fs::path(dir) / "dataset.json") << root.dump(2) << "\n";

    for (const auto& obj : dataset.objects) {
        const fs::path odir = fs::path(dir) / "objects" / obj.id;
        fs::create_directories(odir);

        json manifest;
        manifest["id"] = obj.id;
        manifest["split"] = obj.test ? "test" : "train";
        manifest["unit_radius"] = assembly_radius(obj.components);
        manifest["components"] = json::array();
        for (std::size_t i = 0; i < obj.components.size(); ++i) {
            char buf[24];
            std::snprintf(buf, sizeof buf, "comp_%03zu.fsec", i);
            manifest["components"].push_back({{"file", buf},
                                              {"id", obj.components[i].id},
                                              {"label", obj.components[i].label}});
            save_component(obj.components[i], odir / buf);
        }
        std::ofstream(odir / "manifest.json") << manifest.dump(2) << "\n";

        std::ofstream gos(odir / "graph.txt");
        for (const auto& [a, b] : obj.graph.edges) gos << a << " " << b << "\n";
    }
}

Dataset load_dataset(const std::string& dir) {
    const fs::path root_path = fs::path(dir) / "dataset.json";
    std::ifstream ris(root_path);
    if (!ris) throw DataError("dataset manifest not found: " + root_path.string());
    json root = json::parse(ris);

    Dataset ds;
    ds.category = root.at("category").get<std::string>();
    ds.seed = root.at("seed").get<std::uint64_t>();
    ds.tau = root.at("tau").get<double>();

    for (const auto& entry : root.at("objects")) {
        ObjectRecord obj;
        obj.id = entry.at("id").get<std::string>();
        obj.test = entry.at("split").get<std::string>() == "test";

        const fs::path odir = fs::path(dir) / "objects" / obj.id;
        std::ifstream mis(odir / "manifest.json");
        if (!mis) throw DataError("object manifest not found: " + (odir / "manifest.json").string());
        json manifest = json::parse(mis);
        for (const auto& ce : manifest.at("components")) {
            obj.components.push_back(load_component(odir / ce.at("file").get<std::string>()));
        }

        const double radius = assembly_radius(obj.components);
        if (std::abs(radius - 1.0) > 1e-6)
            throw DataError("object " + obj.id + ": assembly radius " + std::to_string(radius) +
                            " is not 1");

        for (const Component& c : obj.components) obj.graph.nodes.push_back(c.id);
        std::sort(obj.graph.nodes.begin(), obj.graph.nodes.end());
        std::ifstream gis(odir / "graph.txt");
        std::string a, b;
        while (gis >> a >> b) obj.graph.edges.emplace_back(a, b);
        std::sort(obj.graph.edges.begin(), obj.graph.edges.end());
        if (!obj.graph.is_connected())
            throw DataError("object " + obj.id + ": contact graph is disconnected");

        ds.objects.push_back(std::move(obj));
    }
    return ds;
}

}  // namespace fse
