#include <gtest/gtest.h>
#include <mini_python.hpp>

namespace {

using mini_python::Interpreter;

std::string out(Interpreter& py, const std::string& code) {
  const auto r = py.run(code);
  EXPECT_TRUE(r.ok) << code << "\n" << r.traceback;
  return r.stdout_text;
}

TEST(MiniPython, Arithmetic) {
  Interpreter py;
  EXPECT_EQ(out(py, "print(1 + 2 * 3, 7 // 2, 7 % 3, 2 ** 10, -3)"), "7 3 1 1024 -3\n");
  EXPECT_EQ(out(py, "print(7 / 2, 1 / 3, 0.1 + 0.2)"), "3.5 0.3333333333333333 0.30000000000000004\n");
  EXPECT_EQ(out(py, "print(1e20, 1e-5, 2.0, 1 < 2, 3 == 4)"), "1e+20 1e-05 2.0 True False\n");
}

TEST(MiniPython, StringsAndFormatting) {
  Interpreter py;
  EXPECT_EQ(out(py, "x = 7 / 3\nprint(f\"{x:.3f}|{'a'!r}|{42:>5}|{0.25:%}\")"), "2.333|'a'|   42|25.000000%\n");
  EXPECT_EQ(out(py, "print('a' + \"b\" * 2, len('héllo'))"), "abb 5\n");
  EXPECT_EQ(out(py, "print(repr('x'), str(3), (1, 'b'), [1, 2])"), "'x' 3 (1, 'b') [1, 2]\n");
  EXPECT_EQ(out(py, "print('a', 'b', sep='-', end='!\\n')"), "a-b!\n");
}

TEST(MiniPython, StatePersists) {
  Interpreter py;
  out(py, "x = 41\na, b = 1, 2");
  EXPECT_TRUE(py.has("x"));
  EXPECT_EQ(out(py, "x += 1\nprint(x, a + b)"), "42 3\n");
}

TEST(MiniPython, ExceptionsProduceTracebacks) {
  Interpreter py;
  auto r = py.run("print('a')\nraise ValueError('boom')");
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.stdout_text, "a\n");
  EXPECT_NE(r.traceback.find("line 2"), std::string::npos);
  EXPECT_NE(r.traceback.find("ValueError: boom"), std::string::npos);
  EXPECT_NE(py.run("print(undefined)").traceback.find("NameError"), std::string::npos);
  EXPECT_NE(py.run("print(1 / 0)").traceback.find("ZeroDivisionError"), std::string::npos);
  EXPECT_NE(py.run("for i in x: pass").traceback.find("SyntaxError"), std::string::npos);
  EXPECT_NE(py.run("  x = 1").traceback.find("IndentationError"), std::string::npos);
}

TEST(MiniPython, Images) {
  Interpreter py;
  std::vector<std::uint8_t> rgb(6 * 4 * 3, 0);
  rgb[0] = 250;
  py.bind_image("image_clue_0", visloop::ImageBlob::from_rgb(6, 4, rgb));
  EXPECT_EQ(out(py, "print(image_clue_0.size, image_clue_0.width, image_clue_0.mode)"), "(6, 4) 6 RGB\n");
  EXPECT_EQ(out(py, "print(image_clue_0.getpixel((0, 0)), image_clue_0.crop((1, 1, 4, 3)).size)"),
            "(250, 0, 0) (3, 2)\n");
  EXPECT_EQ(out(py, "print(image_clue_0.resize((12, 8)).size, image_clue_0.rotate(180).getpixel((5, 3)))"),
            "(12, 8) (250, 0, 0)\n");
}

TEST(MiniPython, FiguresFromShow) {
  Interpreter py;
  py.bind_image("img", visloop::ImageBlob::solid(8, 8, 1, 1, 1));
  auto r = py.run("import matplotlib.pyplot as plt\nplt.imshow(img.crop((0, 0, 3, 2)))\nplt.show()\nplt.plot([1])\nplt.show()");
  ASSERT_TRUE(r.ok) << r.traceback;
  ASSERT_EQ(r.figures.size(), 2u);
  EXPECT_EQ(r.figures[0].width(), 3u);
  EXPECT_EQ(r.figures[1].width(), 64u);
  EXPECT_TRUE(py.run("plt.show()").figures.empty());
}

TEST(MiniPython, UnknownLibrariesAreTolerated) {
  Interpreter py;
  auto r = py.run("import numpy as np\narr = np.array([1, 2])\nprint('done')");
  EXPECT_EQ(r.stdout_text, "done\n");
}

TEST(MiniPython, StderrWrites) {
  Interpreter py;
  auto r = py.run("import sys\nsys.stderr.write('warn\\n')");
  EXPECT_TRUE(r.ok);
  EXPECT_EQ(r.stderr_text, "warn\n");
}

}  // namespace
