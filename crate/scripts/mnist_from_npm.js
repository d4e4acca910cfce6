// Converts the digits bundled with the npm `mnist` package into gzipped IDX files.
// Usage: node mnist_from_npm.js <path-to-npm-mnist-package> <out-dir>
const fs = require('fs');
const path = require('path');
const zlib = require('zlib');

const pkg = process.argv[2];
const out = process.argv[3];
const mnist = require(path.resolve(pkg));

const perDigit = [];
for (let d = 0; d < 10; d++) perDigit.push(mnist[d].range(0, mnist[d].length));

// Interleave digits so any prefix is roughly class balanced.
const images = [];
const labels = [];
for (let i = 0; ; i++) {
  let any = false;
  for (let d = 0; d < 10; d++) {
    if (i < perDigit[d].length) {
      images.push(perDigit[d][i]);
      labels.push(d);
      any = true;
    }
  }
  if (!any) break;
}

const n = images.length;
const img = Buffer.alloc(16 + n * 784);
img.writeUInt32BE(0x00000803, 0);
img.writeUInt32BE(n, 4);
img.writeUInt32BE(28, 8);
img.writeUInt32BE(28, 12);
images.forEach((im, k) => {
  im.forEach((v, p) => { img[16 + k * 784 + p] = Math.round(v * 255); });
});
const lab = Buffer.alloc(8 + n);
lab.writeUInt32BE(0x00000801, 0);
lab.writeUInt32BE(n, 4);
labels.forEach((l, k) => { lab[8 + k] = l; });

fs.mkdirSync(out, { recursive: true });
fs.writeFileSync(path.join(out, 'images-idx3-ubyte.gz'), zlib.gzipSync(img, { level: 9 }));
fs.writeFileSync(path.join(out, 'labels-idx1-ubyte.gz'), zlib.gzipSync(lab, { level: 9 }));
console.log(`wrote ${n} digits`);
