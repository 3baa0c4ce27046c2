// Regenerates the bundled two-part meshes: make_fixtures <out_dir>
#include "dexforge/mesh_primitives.hpp"

#include <filesystem>
#include <iostream>

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <out_dir>\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  try {
    std::filesystem::create_directories(dir);
    dexforge::write_obj(dexforge::fixtures::bottle(), dir / "bottle.obj");
    dexforge::write_labels(dexforge::fixtures::bottle(), dir / "bottle.parts.json");
    dexforge::write_obj(dexforge::fixtures::hammer(), dir / "hammer.obj");
    dexforge::write_labels(dexforge::fixtures::hammer(), dir / "hammer.parts.json");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
