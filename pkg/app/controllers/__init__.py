# Controllers package: lab runs dan verification suites
