#pragma once

// Fixtures shared by the unit tests.

#include "tmf/attack_kb.hpp"
#include "tmf/model.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>
#include <string>

namespace tmf::testing {

inline std::filesystem::path data_path(const std::string& rel) { return std::filesystem::path(TMF_DATA_DIR) / rel; }

inline const KnowledgeBase& sample_kb()
{
    static const KnowledgeBase kb = import_stix_bundle(data_path("attack/sample-bundle.json"));
    return kb;
}

inline TechniqueRecord technique(const std::string& id, const std::string& name, const std::string& desc = "",
                                 bool revoked = false)
{
    TechniqueRecord r;
    r.id = TechniqueId::parse(id);
    r.name = name;
    r.description = desc.empty() ? name + " description" : desc;
    r.revoked = revoked;
    return r;
}

/// Random well-formed technique id, a sub-technique one time in three.
inline std::string random_id_text(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> parent(1000, 1999);
    std::uniform_int_distribution<int> sub(1, 20);
    std::string s = "T" + std::to_string(parent(rng));
    if (rng() % 3 == 0) {
        const int n = sub(rng);
        s += "." + std::string(n < 10 ? "00" : "0") + std::to_string(n);
    }
    return s;
}

/// Temporary directory removed on destruction.
class TempDir {
public:
    TempDir()
    {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("tmf-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace tmf::testing
