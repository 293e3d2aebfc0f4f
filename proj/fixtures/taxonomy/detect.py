import cv2
import numpy as np
import matplotlib.pyplot as plt

arr = np.array(image_clue_0)
edges = cv2.Canny(cv2.cvtColor(arr, cv2.COLOR_RGB2GRAY), 50, 150)
contours, _ = cv2.findContours(edges, cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE)
x, y, w, h = cv2.boundingRect(max(contours, key=cv2.contourArea))
# crop around the detected object
plt.imshow(arr[y:y + h, x:x + w])
plt.show()
